/**
 * Wire format of the episode server: newline-delimited JSON frames.
 *
 * Client -> server:
 *   {"cmd":"reset","seed":int} | {"cmd":"step","action":int} | {"cmd":"close"}
 * Server -> client (reset omits reward/done):
 *   {"obs":{"shape":[h,w,t],"data":[0|1...]},"mask":[0|1...],"loc":[r,c],
 *    "reward":number,"done":boolean,"info":{...}}
 * Errors: {"error":code,"detail":string}
 */

export interface ObsPayload {
  shape: number[];
  data: number[];
}

export interface StateFrame {
  obs: ObsPayload;
  mask: number[];
  loc: [number, number];
  reward?: number;
  done?: boolean;
  info?: Record<string, unknown>;
}

export interface ErrorFrame {
  error: string;
  detail?: string;
}

export type ServerFrame = StateFrame | ErrorFrame | { ok: boolean };

export type RequestFrame =
  | { cmd: "reset"; seed: number }
  | { cmd: "step"; action: number }
  | { cmd: "close" };

export function isErrorFrame(frame: ServerFrame): frame is ErrorFrame {
  return typeof frame === "object" && frame !== null && "error" in frame;
}

export function isStateFrame(frame: ServerFrame): frame is StateFrame {
  return typeof frame === "object" && frame !== null && "obs" in frame;
}

export function encodeFrame(frame: RequestFrame): string {
  return `${JSON.stringify(frame)}\n`;
}

/** Incremental splitter for newline-delimited JSON byte streams. */
export class LineDecoder {
  private buffer = "";

  push(chunk: Buffer | string): string[] {
    this.buffer += chunk.toString();
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    return lines.filter((line) => line.trim().length > 0);
  }
}

export class ProtocolError extends Error {}
export class TransportError extends Error {}
export class MaskedActionError extends Error {}
export class EpisodeFinishedError extends Error {}
export class PlacementFailedError extends Error {}

export function parseServerFrame(line: string): ServerFrame {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`invalid JSON frame: ${(err as Error).message}`);
  }
  if (typeof parsed !== "object" || parsed === null) {
    throw new ProtocolError(`expected an object frame, got: ${line}`);
  }
  return parsed as ServerFrame;
}
