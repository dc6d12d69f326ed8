/**
 * Widget state machine. Phases advance strictly along the protocol order;
 * Denied is reachable from the phases where the server can turn us away.
 * Tile URLs may only enter the state when the Challenge phase begins,
 * which is structurally after PoW verification succeeded.
 */
import { ImageChallengeView } from "./protocol.js";

export type Phase =
  | "idle"
  | "fetching"
  | "solving"
  | "verifying"
  | "challenge"
  | "submitting"
  | "passed"
  | "denied";

const TRANSITIONS: Record<Phase, Phase[]> = {
  idle: ["fetching"],
  fetching: ["solving", "denied"],
  solving: ["verifying"],
  verifying: ["challenge", "denied"],
  challenge: ["submitting", "denied"],
  submitting: ["passed", "denied", "challenge"],
  passed: [],
  denied: ["fetching"], // restart affordance
};

export class IllegalTransition extends Error {
  constructor(from: Phase, to: Phase) {
    super(`illegal widget transition ${from} -> ${to}`);
  }
}

export interface StateSnapshot {
  phase: Phase;
  noncesTried: number;
  challenge: ImageChallengeView | null;
  selections: Set<number>;
}

export class WidgetState {
  private _phase: Phase = "idle";
  noncesTried = 0;
  challenge: ImageChallengeView | null = null;
  selections = new Set<number>();
  private listeners: Array<(snapshot: StateSnapshot) => void> = [];

  get phase(): Phase {
    return this._phase;
  }

  subscribe(listener: (snapshot: StateSnapshot) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    const snapshot: StateSnapshot = {
      phase: this._phase,
      noncesTried: this.noncesTried,
      challenge: this.challenge,
      selections: new Set(this.selections),
    };
    for (const listener of this.listeners) listener(snapshot);
  }

  transition(to: Phase, challenge?: ImageChallengeView): void {
    if (!TRANSITIONS[this._phase].includes(to)) {
      throw new IllegalTransition(this._phase, to);
    }
    if (challenge !== undefined && to !== "challenge") {
      throw new IllegalTransition(this._phase, to);
    }
    this._phase = to;
    if (to === "challenge" && challenge !== undefined) {
      this.challenge = challenge;
      this.selections = new Set();
    }
    if (to === "fetching") {
      // Restart: no stale imagery may survive into the new round.
      this.challenge = null;
      this.selections = new Set();
      this.noncesTried = 0;
    }
    this.notify();
  }

  progress(tried: number): void {
    this.noncesTried = tried;
    this.notify();
  }

  toggleTile(index: number): void {
    if (this._phase !== "challenge") return;
    if (this.selections.has(index)) {
      this.selections.delete(index);
    } else {
      this.selections.add(index);
    }
    this.notify();
  }

  /** Imagery must never exist before verification succeeded. */
  hasImagery(): boolean {
    return this.challenge !== null;
  }
}
