/**
 * Masked RL environment facade over one bridge session. Pure protocol
 * client: every piece of environment logic (masking, rewards, termination)
 * lives on the server side and is only relayed here.
 */

import {
  EpisodeFinishedError,
  isErrorFrame,
  isStateFrame,
  MaskedActionError,
  PlacementFailedError,
  ProtocolError,
  type StateFrame,
  type ServerFrame,
} from "./protocol.js";
import type { Transport } from "./session.js";

export interface StepResult {
  observation: Uint8Array;
  mask: Uint8Array;
  location: [number, number];
  reward: number;
  done: boolean;
  info: Record<string, unknown>;
}

export interface ResetResult {
  observation: Uint8Array;
  mask: Uint8Array;
  location: [number, number];
  info: Record<string, unknown>;
}

function toTyped(values: number[]): Uint8Array {
  return Uint8Array.from(values);
}

export class MaskedBridgeEnv {
  private transport: Transport;
  obsShape: number[] | null = null;
  actionCount: number | null = null;
  private lastMask: Uint8Array | null = null;
  private episodeLive = false;

  constructor(transport: Transport) {
    this.transport = transport;
  }

  private checkState(frame: ServerFrame, context: string): StateFrame {
    if (isErrorFrame(frame)) {
      if (frame.error === "masked_action") {
        throw new MaskedActionError(frame.detail ?? "masked action");
      }
      if (frame.error === "episode_finished") {
        throw new EpisodeFinishedError(frame.detail ?? "episode finished");
      }
      if (frame.error === "placement_failed") {
        throw new PlacementFailedError(frame.detail ?? "placement failed");
      }
      throw new ProtocolError(`${context}: server error ${frame.error}: ${frame.detail ?? ""}`);
    }
    if (!isStateFrame(frame)) {
      throw new ProtocolError(`${context}: unexpected frame shape`);
    }
    return frame;
  }

  async reset(seed: number): Promise<ResetResult> {
    const frame = this.checkState(await this.transport.request({ cmd: "reset", seed }), "reset");
    if ("reward" in frame || "done" in frame) {
      throw new ProtocolError("reset frame must omit reward/done");
    }
    this.obsShape = frame.obs.shape;
    this.actionCount = frame.mask.length;
    this.lastMask = toTyped(frame.mask);
    this.episodeLive = true;
    const expected = frame.obs.shape.reduce((a, b) => a * b, 1);
    if (frame.obs.data.length !== expected) {
      throw new ProtocolError(
        `observation data length ${frame.obs.data.length} != shape product ${expected}`,
      );
    }
    return {
      observation: toTyped(frame.obs.data),
      mask: this.lastMask,
      location: frame.loc,
      info: frame.info ?? {},
    };
  }

  async step(action: number): Promise<StepResult> {
    if (!this.episodeLive) {
      throw new EpisodeFinishedError("no live episode; call reset first");
    }
    if (
      this.actionCount !== null &&
      (!Number.isInteger(action) || action < 0 || action >= this.actionCount)
    ) {
      throw new MaskedActionError(`action ${action} outside 0..${this.actionCount - 1}`);
    }
    const frame = this.checkState(await this.transport.request({ cmd: "step", action }), "step");
    if (typeof frame.reward !== "number" || typeof frame.done !== "boolean") {
      throw new ProtocolError("step frame must carry reward and done");
    }
    if (this.actionCount !== null && frame.mask.length !== this.actionCount) {
      throw new ProtocolError(
        `mask length changed mid-episode: ${frame.mask.length} != ${this.actionCount}`,
      );
    }
    this.lastMask = toTyped(frame.mask);
    if (frame.done) {
      this.episodeLive = false;
    }
    return {
      observation: toTyped(frame.obs.data),
      mask: this.lastMask,
      location: frame.loc,
      reward: frame.reward,
      done: frame.done,
      info: frame.info ?? {},
    };
  }

  /** Masking hook for trainers: the mask from the most recent frame, as-is. */
  actionMask(): Uint8Array {
    if (this.lastMask === null) {
      throw new ProtocolError("no mask received yet; call reset first");
    }
    return this.lastMask;
  }

  async close(): Promise<void> {
    await this.transport.close();
  }
}
