/**
 * Client-side view of one session. Mirrors the server document and the
 * latest recommendation; never decides placements locally. Draft readings
 * are buffered here until the agent submits a location (offline tolerant:
 * typing costs no requests, exactly one POST per submitted location).
 */
import type { LearnerSnapshot, Recommendation, SessionDoc } from "./api.js";

export interface SessionView {
    id: string;
    version: number;
    mode: "sequential" | "window";
    policyKind: string;
    aSkip: number;
    bWindow: number;
    powerLevelsDbm: number[];
    xiOut: number;
    xiRelay: number;
    /** next location to measure (sequential) or lowest unmeasured (window) */
    cursor: number;
    measuredLocations: number[];
    draft: (number | null)[];
    recommendation: Recommendation | null;
    learner: LearnerSnapshot | null;
    /** learner snapshots in placement order, rebuilt from history */
    snapshots: LearnerSnapshot[];
    placements: SessionDoc["history"];
}

export function viewFromDoc(doc: SessionDoc): SessionView {
    const measured = Object.keys(doc.round.readings).map(Number).sort((a, b) => a - b);
    const { a_skip, b_window, xi_out, xi_relay } = doc.config.deployment;
    const window = windowLocations(a_skip, b_window);
    const cursor = doc.mode === "sequential"
        ? doc.round.cursor
        : window.find((r) => !measured.includes(r)) ?? window[window.length - 1];
    const snapshots = doc.history
        .filter((h) => h.lambda_hat !== null)
        .map((h, i) => ({
            lambda_hat: h.lambda_hat as number,
            xi_out_hat: h.xi_out_hat as number,
            xi_relay_hat: h.xi_relay_hat as number,
            k: i + 1,
            sum_power: NaN,
            sum_outage: NaN,
            sum_distance: NaN,
        }));
    return {
        id: doc.id,
        version: doc.version,
        mode: doc.mode,
        policyKind: doc.config.policy.kind,
        aSkip: a_skip,
        bWindow: b_window,
        powerLevelsDbm: doc.config.channel.power_levels_dbm,
        xiOut: xi_out,
        xiRelay: xi_relay,
        cursor,
        measuredLocations: measured,
        draft: doc.config.channel.power_levels_dbm.map(() => null),
        recommendation: doc.pending
            ? {
                action: "place",
                u_steps: doc.pending.u_steps,
                gamma_dbm: doc.pending.gamma_dbm,
                session_version: doc.version,
            }
            : null,
        learner: doc.learner,
        snapshots,
        placements: doc.history,
    };
}

export function windowLocations(aSkip: number, bWindow: number): number[] {
    return Array.from({ length: bWindow }, (_, i) => aSkip + 1 + i);
}

export function draftComplete(draft: (number | null)[]): boolean {
    return draft.length > 0 && draft.every((v) => v !== null && v >= 0 && v <= 1);
}

export function setDraft(view: SessionView, levelIndex: number, q: number | null): SessionView {
    const draft = view.draft.slice();
    draft[levelIndex] = q;
    return { ...view, draft };
}

/** "x of B locations measured" label for window sessions. */
export function progressLabel(view: SessionView): string {
    if (view.mode === "window") {
        return `${view.measuredLocations.length} of ${view.bWindow} locations measured`;
    }
    return `at location ${view.cursor} of ${view.aSkip + view.bWindow}`;
}

/** Sequential sessions must place at the window end. */
export function forcedPlacementNotice(view: SessionView): boolean {
    return view.mode === "sequential" && view.cursor === view.aSkip + view.bWindow;
}

export function applyRecommendation(view: SessionView, rec: Recommendation): SessionView {
    const next: SessionView = {
        ...view,
        version: rec.session_version,
        recommendation: rec,
        draft: view.powerLevelsDbm.map(() => null),
    };
    if (view.mode === "sequential" && rec.action === "continue") {
        next.cursor = view.cursor + 1;
        next.measuredLocations = [...view.measuredLocations, view.cursor];
    } else if (view.mode === "window") {
        next.measuredLocations = [...view.measuredLocations, view.cursor];
        const pending = rec.locations_pending ?? [];
        if (rec.action === "need_more" && pending.length > 0) {
            next.cursor = pending[0];
        }
    }
    return next;
}

export function recommendationText(rec: Recommendation | null): string {
    if (rec === null) return "enter readings for the current location";
    switch (rec.action) {
        case "continue":
            return "Continue: walk to the next location";
        case "need_more":
            return `Need more locations: ${(rec.locations_pending ?? []).join(", ")}`;
        case "place":
            return `Place the relay ${rec.u_steps} steps out at ${rec.gamma_dbm?.toFixed(1)} dBm`;
    }
}

export function lambdaSeries(view: SessionView): number[] {
    return view.snapshots.map((s) => s.lambda_hat);
}
