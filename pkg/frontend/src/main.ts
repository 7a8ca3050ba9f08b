/** Wires the API client, session state and DOM together. One session per tab. */
import { ApiError, AssistantClient, SessionConfig } from "./api.js";
import { applyRecommendation, setDraft, viewFromDoc, SessionView } from "./state.js";
import {
    renderConfirmControls,
    renderError,
    renderLearnerPanel,
    renderPlacements,
    renderProgress,
    renderReadingsForm,
    renderRecommendation,
    renderSessionList,
} from "./ui.js";

let client = new AssistantClient("");
let view: SessionView | null = null;

const $ = (id: string) => document.getElementById(id) as HTMLElement;

function redraw(): void {
    if (view === null) return;
    renderProgress($("progress"), view);
    renderReadingsForm($("readings"), view, submitLocation);
    renderRecommendation($("recommendation"), view.recommendation);
    renderConfirmControls($("confirm"), view, confirmPlacement);
    renderLearnerPanel($("learner"), view);
    renderPlacements($("placements"), view);
    const trace = $("trace-link") as HTMLAnchorElement;
    trace.href = `${baseUrl()}/sessions/${view.id}/trace`;
    trace.style.display = "inline";
}

function baseUrl(): string {
    return ($("base-url") as HTMLInputElement).value.replace(/\/$/, "");
}

function fail(err: unknown): void {
    renderError($("error"), err instanceof ApiError ? err.detail : String(err));
}

async function resume(id: string): Promise<void> {
    try {
        const doc = await client.getSession(id);
        view = viewFromDoc(doc);
        renderError($("error"), null);
        redraw();
    } catch (err) {
        fail(err);
    }
}

async function submitLocation(readings: number[]): Promise<void> {
    if (view === null) return;
    try {
        const rec = await client.submitMeasurement(view.id, view.cursor, readings,
                                                   view.version);
        view = applyRecommendation(view, rec);
        renderError($("error"), null);
        redraw();
    } catch (err) {
        fail(err);
    }
}

async function confirmPlacement(uSteps: number, gammaDbm: number, q: number,
                                override: boolean): Promise<void> {
    if (view === null) return;
    try {
        await client.confirmPlacement(view.id, {
            u_steps: uSteps,
            gamma_dbm: gammaDbm,
            realized_outage: q,
            override,
            expected_version: view.version,
        });
        await resume(view.id);  // reload the authoritative document
    } catch (err) {
        fail(err);
    }
}

function configFromForm(): SessionConfig {
    const num = (id: string) => Number(($(id) as HTMLInputElement).value);
    const str = (id: string) => ($(id) as HTMLInputElement).value;
    const kind = (document.getElementById("policy-kind") as HTMLSelectElement).value;
    const policy: SessionConfig["policy"] = { kind };
    if (kind === "heu-ayg") {
        policy.fixed_power_dbm = num("fixed-power");
        policy.target_outage = num("target-outage") / 100;
    }
    if (kind === "oel-learn" || kind === "oel-ratio" || kind === "oelal") {
        policy.lambda0 = num("lambda0");
    }
    if (kind === "oel-learn" || kind === "oelal") {
        policy.schedule_a = { scale: 1.0, exponent: 0.55 };
    }
    if (kind === "oelal") {
        policy.schedule_b_out = { scale: 10000.0, exponent: 0.8 };
        policy.schedule_b_relay = { scale: 1.0, exponent: 0.8 };
        policy.q_bar = num("q-bar") / 100;
        policy.n_bar = 1 / num("target-distance");
    }
    return {
        channel: {
            eta: num("eta"),
            c_db: num("c-db"),
            r0_m: 1.0,
            p_rcv_min_dbm: num("p-rcv-min"),
            delta_m: num("delta-m"),
            power_levels_dbm: str("power-levels").split(",").map(Number),
            shadowing: { sigma_db: num("sigma-db") },
        },
        deployment: {
            a_skip: num("a-skip"),
            b_window: num("b-window"),
            xi_out: num("xi-out"),
            xi_relay: num("xi-relay"),
        },
        policy,
    };
}

async function init(): Promise<void> {
    client = new AssistantClient(baseUrl());
    ($("base-url") as HTMLInputElement).addEventListener("change", () => {
        client = new AssistantClient(baseUrl());
        void refreshList();
    });
    $("create-form").addEventListener("submit", (ev) => {
        ev.preventDefault();
        client.createSession(configFromForm())
            .then((doc) => { view = viewFromDoc(doc); redraw(); return refreshList(); })
            .catch(fail);
    });
    $("resume-form").addEventListener("submit", (ev) => {
        ev.preventDefault();
        void resume(($("resume-id") as HTMLInputElement).value.trim());
    });
    (document.getElementById("policy-kind") as HTMLSelectElement)
        .addEventListener("change", (ev) => {
            const kind = (ev.target as HTMLSelectElement).value;
            $("learner-params").style.display =
                ["oel-learn", "oel-ratio", "oelal"].includes(kind) ? "block" : "none";
            $("heu-params").style.display = kind === "heu-ayg" ? "block" : "none";
            $("oelal-params").style.display = kind === "oelal" ? "block" : "none";
        });
    await refreshList();
}

async function refreshList(): Promise<void> {
    try {
        const { sessions } = await client.listSessions();
        renderSessionList($("session-list"), sessions, (id) => void resume(id));
    } catch (err) {
        fail(err);
    }
}

document.addEventListener("DOMContentLoaded", () => void init());
