/** Tiny dependency-free SVG sparkline for the learner trajectory. */

export interface Point {
    x: number;
    y: number;
}

export function sparklinePoints(values: number[], width: number, height: number,
                                pad = 2): Point[] {
    if (values.length === 0) return [];
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    const span = hi - lo;
    const innerW = width - 2 * pad;
    const innerH = height - 2 * pad;
    return values.map((v, i) => ({
        x: pad + (values.length === 1 ? innerW / 2 : (i * innerW) / (values.length - 1)),
        y: pad + (span === 0 ? innerH / 2 : innerH - ((v - lo) * innerH) / span),
    }));
}

export function sparklinePath(values: number[], width = 160, height = 36): string {
    const pts = sparklinePoints(values, width, height);
    if (pts.length === 0) return "";
    return pts
        .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(2)},${p.y.toFixed(2)}`)
        .join(" ");
}

export function sparklineSvg(values: number[], width = 160, height = 36): string {
    const path = sparklinePath(values, width, height);
    if (path === "") return `<svg width="${width}" height="${height}"></svg>`;
    return `<svg width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`
        + `<path d="${path}" fill="none" stroke="currentColor" stroke-width="1.5"/>`
        + `</svg>`;
}
