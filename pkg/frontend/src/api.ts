/**
 * Typed client for the deployment-assistant HTTP API. The UI never
 * computes placement decisions itself; everything comes from here.
 */

export interface ScheduleSpec {
    scale: number;
    exponent: number;
}

export interface PolicySpec {
    kind: string;
    n_shadowing?: number;
    fixed_power_dbm?: number;
    target_outage?: number;
    lambda0?: number;
    xi_out0?: number;
    xi_relay0?: number;
    schedule_a?: ScheduleSpec;
    schedule_b_out?: ScheduleSpec;
    schedule_b_relay?: ScheduleSpec;
    q_bar?: number;
    n_bar?: number;
    box?: [number, number];
}

export interface SessionConfig {
    channel: {
        eta: number;
        c_db: number;
        r0_m?: number;
        p_rcv_min_dbm: number;
        delta_m: number;
        power_levels_dbm: number[];
        shadowing: { sigma_db?: number; finite?: { values: number[]; probs: number[] } };
    };
    deployment: { a_skip: number; b_window: number; xi_out: number; xi_relay: number };
    policy: PolicySpec;
}

export interface Recommendation {
    action: "continue" | "place" | "need_more";
    u_steps?: number | null;
    gamma_dbm?: number | null;
    gamma_mw?: number | null;
    locations_pending?: number[] | null;
    session_version: number;
}

export interface LearnerSnapshot {
    lambda_hat: number;
    xi_out_hat: number;
    xi_relay_hat: number;
    k: number;
    sum_power: number;
    sum_outage: number;
    sum_distance: number;
}

export interface PlacementRow {
    u_steps: number;
    gamma_dbm: number;
    q_out: number;
    lambda_hat: number | null;
    xi_out_hat: number | null;
    xi_relay_hat: number | null;
    override: boolean;
    measured: number;
}

export interface SessionDoc {
    id: string;
    version: number;
    created_at: string;
    updated_at: string;
    mode: "sequential" | "window";
    config: SessionConfig;
    round: { cursor: number; readings: Record<string, number[]> };
    pending: { u_steps: number; gamma_dbm: number } | null;
    learner: LearnerSnapshot | null;
    history: PlacementRow[];
}

export interface SessionBrief {
    id: string;
    policy_kind: string;
    mode: string;
    placements: number;
    version: number;
    updated_at: string;
}

export interface ConfirmRequest {
    u_steps: number;
    gamma_dbm: number;
    realized_outage: number;
    override?: boolean;
    expected_version?: number;
}

export interface ConfirmResponse {
    session_version: number;
    placements: number;
    learner: LearnerSnapshot | null;
}

export class ApiError extends Error {
    constructor(readonly status: number, readonly detail: string) {
        super(`HTTP ${status}: ${detail}`);
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AssistantClient {
    constructor(
        private readonly baseUrl: string,
        private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
        if (!resp.ok) {
            let detail = resp.statusText;
            try {
                const body = await resp.json();
                detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
            } catch {
                /* non-JSON error body */
            }
            throw new ApiError(resp.status, detail);
        }
        return (await resp.json()) as T;
    }

    private post<T>(path: string, body: unknown): Promise<T> {
        return this.request<T>(path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        });
    }

    health(): Promise<{ status: string }> {
        return this.request("/health");
    }

    createSession(config: SessionConfig): Promise<SessionDoc> {
        return this.post("/sessions", config);
    }

    getSession(id: string): Promise<SessionDoc> {
        return this.request(`/sessions/${id}`);
    }

    listSessions(): Promise<{ sessions: SessionBrief[] }> {
        return this.request("/sessions");
    }

    submitMeasurement(
        id: string,
        location: number,
        readings: number[],
        expectedVersion?: number,
    ): Promise<Recommendation> {
        return this.post(`/sessions/${id}/measurements`, {
            location,
            readings,
            expected_version: expectedVersion,
        });
    }

    confirmPlacement(id: string, req: ConfirmRequest): Promise<ConfirmResponse> {
        return this.post(`/sessions/${id}/placements`, req);
    }

    async fetchTrace(id: string): Promise<string> {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${id}/trace`);
        if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
        return resp.text();
    }
}
