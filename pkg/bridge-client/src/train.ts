/**
 * Smoke trainer: maskable REINFORCE against a spawned episode server.
 * Run directly (`npm run smoke-train -- --config path/to/env.conf`) or call
 * smokeTrain() from tests. Success criterion: the requested number of env
 * steps complete without a single protocol error.
 */

import { fileURLToPath } from "node:url";

import { MaskedBridgeEnv } from "./env.js";
import { MaskedLinearPolicy, mulberry32, pooledFeatures } from "./policy.js";
import { PlacementFailedError } from "./protocol.js";
import { spawnServer } from "./session.js";

export interface SmokeTrainOptions {
  configPath: string;
  totalSteps: number;
  seed?: number;
  learningRate?: number;
  gamma?: number;
  python?: string;
  channels?: number;
}

export interface SmokeTrainResult {
  steps: number;
  episodes: number;
  meanReturnFirst: number;
  meanReturnLast: number;
}

export async function smokeTrain(options: SmokeTrainOptions): Promise<SmokeTrainResult> {
  const seed = options.seed ?? 0;
  const lr = options.learningRate ?? 0.01;
  const gamma = options.gamma ?? 0.99;
  const channels = options.channels ?? 7;
  const uniform = mulberry32(seed * 2654435761 + 1);
  const env = new MaskedBridgeEnv(
    spawnServer({ configPath: options.configPath, python: options.python }),
  );
  let policy: MaskedLinearPolicy | null = null;
  let baseline = 0;
  let steps = 0;
  let episodes = 0;
  let episodeSeed = seed;
  const returns: number[] = [];
  try {
    while (steps < options.totalSteps) {
      episodeSeed += 1;
      let start;
      try {
        start = await env.reset(episodeSeed);
      } catch (err) {
        if (err instanceof PlacementFailedError) {
          continue; // this seed could not start an episode; try the next one
        }
        throw err;
      }
      let mask = start.mask;
      let features = pooledFeatures(start.observation, channels);
      if (policy === null) {
        policy = new MaskedLinearPolicy(mask.length, channels + 1);
      }
      const trajectory: Array<{
        features: Float64Array;
        mask: Uint8Array;
        action: number;
        reward: number;
      }> = [];
      for (;;) {
        const maskFromProvider = env.actionMask();
        const action = policy.sample(features, maskFromProvider, uniform);
        const result = await env.step(action);
        trajectory.push({ features, mask: maskFromProvider, action, reward: result.reward });
        steps += 1;
        mask = result.mask;
        features = pooledFeatures(result.observation, channels);
        if (result.done || steps >= options.totalSteps) {
          break;
        }
      }
      episodes += 1;
      let g = 0;
      const discounted: number[] = new Array(trajectory.length);
      for (let t = trajectory.length - 1; t >= 0; t--) {
        g = trajectory[t].reward + gamma * g;
        discounted[t] = g;
      }
      const episodeReturn = trajectory.reduce((acc, t) => acc + t.reward, 0);
      returns.push(episodeReturn);
      baseline = 0.9 * baseline + 0.1 * episodeReturn;
      for (let t = 0; t < trajectory.length; t++) {
        const { features: f, mask: m, action } = trajectory[t];
        policy.update(f, m, action, discounted[t] - baseline, lr);
      }
    }
  } finally {
    await env.close();
  }
  const head = returns.slice(0, Math.max(1, Math.floor(returns.length / 5)));
  const tail = returns.slice(-Math.max(1, Math.floor(returns.length / 5)));
  const mean = (xs: number[]) => xs.reduce((a, b) => a + b, 0) / xs.length;
  return {
    steps,
    episodes,
    meanReturnFirst: mean(head),
    meanReturnLast: mean(tail),
  };
}

async function main(): Promise<void> {
  const args = process.argv.slice(2);
  const configIndex = args.indexOf("--config");
  if (configIndex < 0 || configIndex + 1 >= args.length) {
    console.error("usage: train --config ENV_CONF [--steps N] [--seed S]");
    process.exit(2);
  }
  const stepsIndex = args.indexOf("--steps");
  const seedIndex = args.indexOf("--seed");
  const result = await smokeTrain({
    configPath: args[configIndex + 1],
    totalSteps: stepsIndex >= 0 ? Number(args[stepsIndex + 1]) : 10_000,
    seed: seedIndex >= 0 ? Number(args[seedIndex + 1]) : 0,
  });
  console.log(JSON.stringify(result, null, 2));
}

if (process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href) {
  main().catch((err) => {
    console.error(err);
    process.exit(1);
  });
}

export const __isMain = fileURLToPath(import.meta.url);
