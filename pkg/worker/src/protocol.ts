/**
 * JSONL stdio evaluation protocol.
 *
 * Request (one JSON object per line):
 *   { "id": number, "policy": [[["Kind", prob, mag], ["Kind", prob, mag]], ...],
 *     "seed": number, "train_size"?: number }
 * Response (exactly one line per request):
 *   { "id": number, "reward": number }   with reward in [0, 1], or
 *   { "id": number|null, "error": string }
 */

import { z } from "zod";

export const OPERATION_KINDS = [
  "ShearX",
  "ShearY",
  "TranslateX",
  "TranslateY",
  "Rotate",
  "AutoContrast",
  "Invert",
  "Equalize",
  "Solarize",
  "Posterize",
  "Contrast",
  "Color",
  "Brightness",
  "Sharpness",
  "Cutout",
  "SamplePairing",
] as const;

export type OperationKind = (typeof OPERATION_KINDS)[number];

const operationSchema = z.tuple([
  z.enum(OPERATION_KINDS),
  z.number().int().min(0).max(10), // probability index: p = index / 10
  z.number().int().min(0).max(9), // magnitude index
]);

const requestSchema = z.object({
  id: z.number().int().nonnegative(),
  policy: z.array(z.tuple([operationSchema, operationSchema])).min(1),
  seed: z.number().int().nonnegative(),
  train_size: z.number().int().positive().optional(),
});

export type OperationSpec = z.infer<typeof operationSchema>;
export type SubPolicy = [OperationSpec, OperationSpec];
export type EvalRequest = z.infer<typeof requestSchema>;

export interface RewardResponse {
  id: number;
  reward: number;
}

export interface ErrorResponse {
  id: number | null;
  error: string;
}

export type EvalResponse = RewardResponse | ErrorResponse;

export class ProtocolError extends Error {}

/** Parse and validate one request line; throws ProtocolError on any defect. */
export function parseRequest(line: string): EvalRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`not valid JSON: ${(err as Error).message}`);
  }
  const parsed = requestSchema.safeParse(raw);
  if (!parsed.success) {
    throw new ProtocolError(`invalid request: ${parsed.error.issues[0]?.message ?? "schema"}`);
  }
  return parsed.data;
}

/** Best-effort id extraction so error responses can still be correlated. */
export function extractId(line: string): number | null {
  try {
    const raw = JSON.parse(line);
    if (typeof raw === "object" && raw !== null && Number.isInteger((raw as any).id)) {
      return (raw as any).id as number;
    }
  } catch {
    /* unparseable: no id */
  }
  return null;
}

export function serializeResponse(res: EvalResponse): string {
  return JSON.stringify(res);
}
