/** DOM rendering. All policy math lives on the server; this file only draws. */
import type { Recommendation, SessionBrief } from "./api.js";
import { formatDbm, formatPercent } from "./format.js";
import { sparklineSvg } from "./sparkline.js";
import {
    SessionView,
    forcedPlacementNotice,
    lambdaSeries,
    progressLabel,
    recommendationText,
} from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    attrs: Record<string, string> = {},
    ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
    node.append(...children);
    return node;
}

export function renderSessionList(
    container: HTMLElement,
    sessions: SessionBrief[],
    onResume: (id: string) => void,
): void {
    container.replaceChildren();
    if (sessions.length === 0) {
        container.append(el("p", { class: "muted" }, "no stored sessions"));
        return;
    }
    for (const s of sessions) {
        const btn = el("button", { class: "link" },
                       `${s.id.slice(0, 8)}… ${s.policy_kind} (${s.placements} placed)`);
        btn.addEventListener("click", () => onResume(s.id));
        container.append(el("div", {}, btn));
    }
}

export function renderProgress(container: HTMLElement, view: SessionView): void {
    container.replaceChildren(
        el("span", { class: "badge" }, view.policyKind),
        el("span", {}, ` session ${view.id.slice(0, 8)}… — ${progressLabel(view)}`),
    );
    if (forcedPlacementNotice(view)) {
        container.append(el("div", { class: "notice" },
                            "window end: a relay must be placed here"));
    }
}

export function renderReadingsForm(
    container: HTMLElement,
    view: SessionView,
    onSubmit: (readings: number[]) => void,
): void {
    container.replaceChildren();
    const form = el("form", { class: "readings" });
    form.append(el("h3", {}, `readings at location ${view.cursor} (outage, %)`));
    const inputs: HTMLInputElement[] = [];
    for (const dbm of view.powerLevelsDbm) {
        const input = el("input", {
            type: "number", step: "any", min: "0", max: "100", required: "true",
            placeholder: "%",
        });
        inputs.push(input);
        form.append(el("label", {}, `${formatDbm(dbm)} `, input));
    }
    const submit = el("button", { type: "submit" }, "submit location");
    form.append(submit);
    form.addEventListener("submit", (ev) => {
        ev.preventDefault();
        onSubmit(inputs.map((i) => Number(i.value) / 100));
    });
    container.append(form);
}

export function renderRecommendation(container: HTMLElement,
                                     rec: Recommendation | null): void {
    const cls = rec?.action === "place" ? "banner place" : "banner";
    container.replaceChildren(el("div", { class: cls }, recommendationText(rec)));
}

export function renderConfirmControls(
    container: HTMLElement,
    view: SessionView,
    onConfirm: (uSteps: number, gammaDbm: number, q: number, override: boolean) => void,
): void {
    container.replaceChildren();
    const rec = view.recommendation;
    if (rec === null || rec.action !== "place") return;
    const form = el("form", { class: "confirm" });
    const uInput = el("input", { type: "number", value: String(rec.u_steps),
                                 min: String(view.aSkip + 1),
                                 max: String(view.aSkip + view.bWindow) });
    const gInput = el("input", { type: "number", step: "any",
                                 value: (rec.gamma_dbm ?? 0).toFixed(4) });
    const qInput = el("input", { type: "number", step: "any", min: "0", max: "100",
                                 required: "true", placeholder: "%" });
    form.append(
        el("label", {}, "placed at (steps) ", uInput),
        el("label", {}, "power (dBm) ", gInput),
        el("label", {}, "measured outage after install (%) ", qInput),
        el("button", { type: "submit" }, "confirm placement"),
    );
    form.addEventListener("submit", (ev) => {
        ev.preventDefault();
        const u = Number(uInput.value);
        const g = Number(gInput.value);
        const override = u !== rec.u_steps || Math.abs(g - (rec.gamma_dbm ?? 0)) > 1e-9;
        onConfirm(u, g, Number(qInput.value) / 100, override);
    });
    container.append(form);
}

export function renderLearnerPanel(container: HTMLElement, view: SessionView): void {
    container.replaceChildren();
    if (view.learner === null) return;
    const series = lambdaSeries(view);
    const spark = el("span", { class: "spark" });
    spark.innerHTML = sparklineSvg(series);
    container.append(
        el("h3", {}, "learner estimates"),
        el("div", {},
           `cost/step ${view.learner.lambda_hat.toFixed(4)} mW  `,
           spark),
        el("div", { class: "muted" },
           `xi_out ${view.learner.xi_out_hat.toFixed(2)} — `
           + `xi_relay ${view.learner.xi_relay_hat.toFixed(4)} — `
           + `${view.learner.k} relays placed`),
    );
}

export function renderPlacements(container: HTMLElement, view: SessionView): void {
    container.replaceChildren(el("h3", {}, `placed relays (${view.placements.length})`));
    const table = el("table", { class: "placements" });
    table.append(el("tr", {},
                    el("th", {}, "#"), el("th", {}, "steps"), el("th", {}, "power"),
                    el("th", {}, "outage"), el("th", {}, "")));
    view.placements.forEach((p, i) => {
        table.append(el("tr", {},
                        el("td", {}, String(i + 1)),
                        el("td", {}, String(p.u_steps)),
                        el("td", {}, formatDbm(p.gamma_dbm)),
                        el("td", {}, formatPercent(p.q_out)),
                        el("td", {}, p.override ? el("span", { class: "override" },
                                                     "override") : "")));
    });
    container.append(table);
}

export function renderError(container: HTMLElement, message: string | null): void {
    container.replaceChildren();
    if (message) container.append(el("div", { class: "error" }, message));
}
