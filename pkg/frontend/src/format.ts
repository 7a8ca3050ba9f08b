/**
 * Display-layer unit conversions: the API speaks linear mW and raw outage
 * probabilities; the UI shows dBm and percent.
 */

export function mwToDbm(mw: number): number {
    if (mw <= 0) throw new Error(`power must be positive, got ${mw}`);
    return 10 * Math.log10(mw);
}

export function dbmToMw(dbm: number): number {
    return Math.pow(10, dbm / 10);
}

export function formatDbm(dbm: number, digits = 1): string {
    return `${dbm.toFixed(digits)} dBm`;
}

export function formatPercent(q: number, digits = 2): string {
    return `${(q * 100).toFixed(digits)}%`;
}

/** Parse a percent string ("1.5", "1.5%") into a probability in [0,1]. */
export function parsePercent(text: string): number {
    const cleaned = text.trim().replace(/%$/, "");
    const value = Number(cleaned);
    if (!Number.isFinite(value) || value < 0 || value > 100) {
        throw new Error(`outage must be 0..100%, got "${text}"`);
    }
    return value / 100;
}
