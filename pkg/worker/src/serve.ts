/**
 * JSONL request/response loop. One response per request line; malformed
 * requests get an error response and never crash the stream.
 */

import * as readline from "readline";
import { Writable } from "stream";

import { ChildConfig, DEFAULT_CHILD, evaluatePolicy } from "./child";
import { Dataset } from "./dataset";
import {
  EvalRequest,
  EvalResponse,
  ProtocolError,
  extractId,
  parseRequest,
  serializeResponse,
} from "./protocol";

export interface WorkerConfig {
  train: Dataset;
  val: Dataset;
  child?: ChildConfig;
  /** Default reduced-training-set size if the request omits train_size. */
  defaultTrainSize?: number;
}

export async function handleRequest(req: EvalRequest, cfg: WorkerConfig): Promise<EvalResponse> {
  try {
    const reward = await evaluatePolicy(
      req.policy,
      cfg.train,
      cfg.val,
      req.seed,
      cfg.child ?? DEFAULT_CHILD,
      req.train_size ?? cfg.defaultTrainSize,
    );
    return { id: req.id, reward };
  } catch (err) {
    return { id: req.id, error: (err as Error).message };
  }
}

export async function handleLine(line: string, cfg: WorkerConfig): Promise<EvalResponse | null> {
  if (line.trim() === "") return null;
  let req: EvalRequest;
  try {
    req = parseRequest(line);
  } catch (err) {
    const message = err instanceof ProtocolError ? err.message : String(err);
    return { id: extractId(line), error: message };
  }
  return handleRequest(req, cfg);
}

/** Run until stdin EOF, answering each request line in order. */
export async function serve(
  input: NodeJS.ReadableStream,
  output: Writable,
  cfg: WorkerConfig,
): Promise<void> {
  const rl = readline.createInterface({ input, crlfDelay: Infinity });
  for await (const line of rl) {
    const response = await handleLine(line, cfg);
    if (response !== null) {
      output.write(serializeResponse(response) + "\n");
    }
  }
}
