/** Wire schemas shared with the service, plus the worker message protocol. */

export interface PowChallengeView {
  challenge_id: string;
  salt: string;
  difficulty_bits: number;
  expires_in_ms: number;
}

export interface ImageChallengeView {
  captcha_id: string;
  prompt: string;
  tiles: string[];
  expires_in_ms: number;
}

export interface SolveRequest {
  salt: string;
  difficulty_bits: number;
  start_nonce: number;
  stride: number;
}

export type WorkerReply =
  | { kind: "progress"; tried: number }
  | { kind: "found"; nonce: number };

export const PROGRESS_EVERY = 4096;
