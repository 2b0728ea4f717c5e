import { z } from "zod";

export const PROTOCOL_NAME = "emo-eval/1";

export const requestSchema = z.object({
  id: z.number().int(),
  subnet: z.number().int().nonnegative(),
  genes: z.array(z.number().int().positive()).nonempty(),
});

export type EvalRequest = z.infer<typeof requestSchema>;

export function handshakeLine(subnets: number): string {
  return JSON.stringify({ protocol: PROTOCOL_NAME, subnets });
}

export function okLine(id: number, error: number): string {
  return JSON.stringify({ id, error });
}

export function failLine(id: number, reason: string): string {
  return JSON.stringify({ id, status: "failed", reason });
}

// Parse one request line. Returns the request, a failure line to send
// back (when an id is recoverable), or null for noise we cannot answer.
export function parseRequestLine(line: string):
  { request: EvalRequest } | { reply: string } | null {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    return null;
  }
  const parsed = requestSchema.safeParse(raw);
  if (parsed.success) return { request: parsed.data };
  const id = (raw as { id?: unknown })?.id;
  if (typeof id === "number") {
    return { reply: failLine(id, `invalid request: ${parsed.error.issues[0].message}`) };
  }
  return null;
}
