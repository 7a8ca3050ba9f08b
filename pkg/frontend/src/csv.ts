/** Parse the service's trace CSV export (same schema as the simulator). */

export const TRACE_HEADER = "k,u_steps,gamma_dbm,q_out,lambda_hat,xi_out_hat,xi_relay_hat";

export interface TraceRow {
    k: number;
    u_steps: number;
    gamma_dbm: number;
    q_out: number;
    lambda_hat: number | null;
    xi_out_hat: number | null;
    xi_relay_hat: number | null;
}

function optional(cell: string): number | null {
    return cell === "" ? null : Number(cell);
}

export function parseTraceCsv(text: string): TraceRow[] {
    const lines = text.split(/\r?\n/).filter((ln) => ln.length > 0);
    if (lines.length === 0 || lines[0] !== TRACE_HEADER) {
        throw new Error(`unexpected trace header: ${lines[0] ?? "(empty)"}`);
    }
    return lines.slice(1).map((ln) => {
        const c = ln.split(",");
        if (c.length !== 7) throw new Error(`malformed trace row: ${ln}`);
        return {
            k: Number(c[0]),
            u_steps: Number(c[1]),
            gamma_dbm: Number(c[2]),
            q_out: Number(c[3]),
            lambda_hat: optional(c[4]),
            xi_out_hat: optional(c[5]),
            xi_relay_hat: optional(c[6]),
        };
    });
}
