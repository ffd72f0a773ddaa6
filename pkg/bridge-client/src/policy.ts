/**
 * Maskable policy-gradient learner over the bridge (REINFORCE with a moving
 * baseline). The policy is linear: per-action logits from per-channel pooled
 * observation features; invalid actions are excluded by the mask before the
 * softmax, so they get zero probability and contribute no gradient.
 */

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function pooledFeatures(observation: Uint8Array, channels: number): Float64Array {
  const features = new Float64Array(channels + 1);
  const cells = observation.length / channels;
  for (let i = 0; i < observation.length; i++) {
    features[i % channels] += observation[i];
  }
  for (let c = 0; c < channels; c++) {
    features[c] /= cells;
  }
  features[channels] = 1; // bias
  return features;
}

export class MaskedLinearPolicy {
  readonly actionCount: number;
  readonly featureCount: number;
  weights: Float64Array; // actionCount x featureCount, row-major

  constructor(actionCount: number, featureCount: number) {
    this.actionCount = actionCount;
    this.featureCount = featureCount;
    this.weights = new Float64Array(actionCount * featureCount);
  }

  logits(features: Float64Array): Float64Array {
    const out = new Float64Array(this.actionCount);
    for (let a = 0; a < this.actionCount; a++) {
      let sum = 0;
      const base = a * this.featureCount;
      for (let f = 0; f < this.featureCount; f++) {
        sum += this.weights[base + f] * features[f];
      }
      out[a] = sum;
    }
    return out;
  }

  /** Probabilities over valid actions only; invalid actions get exactly 0. */
  maskedProbabilities(features: Float64Array, mask: Uint8Array): Float64Array {
    const logits = this.logits(features);
    let maxLogit = -Infinity;
    for (let a = 0; a < this.actionCount; a++) {
      if (mask[a] && logits[a] > maxLogit) {
        maxLogit = logits[a];
      }
    }
    const probs = new Float64Array(this.actionCount);
    let total = 0;
    for (let a = 0; a < this.actionCount; a++) {
      if (mask[a]) {
        probs[a] = Math.exp(logits[a] - maxLogit);
        total += probs[a];
      }
    }
    for (let a = 0; a < this.actionCount; a++) {
      probs[a] /= total;
    }
    return probs;
  }

  sample(features: Float64Array, mask: Uint8Array, uniform: () => number): number {
    const probs = this.maskedProbabilities(features, mask);
    const draw = uniform();
    let cumulative = 0;
    let lastValid = -1;
    for (let a = 0; a < this.actionCount; a++) {
      if (!mask[a]) continue;
      lastValid = a;
      cumulative += probs[a];
      if (draw < cumulative) {
        return a;
      }
    }
    return lastValid; // rounding tail
  }

  /** REINFORCE update for one step: advantage * grad log pi(action). */
  update(
    features: Float64Array,
    mask: Uint8Array,
    action: number,
    advantage: number,
    learningRate: number,
  ): void {
    const probs = this.maskedProbabilities(features, mask);
    for (let a = 0; a < this.actionCount; a++) {
      if (!mask[a]) continue; // masked actions receive no gradient
      const indicator = a === action ? 1 : 0;
      const coefficient = learningRate * advantage * (indicator - probs[a]);
      const base = a * this.featureCount;
      for (let f = 0; f < this.featureCount; f++) {
        this.weights[base + f] += coefficient * features[f];
      }
    }
  }
}
