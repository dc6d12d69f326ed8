/**
 * Background solver. The hashing loop lives here, off the UI thread;
 * progress goes back to the page every PROGRESS_EVERY attempts.
 *
 * Runs as a browser Web Worker; the same module also wires itself to
 * node's worker_threads so the thread-liveness tests exercise the real
 * code path.
 */
import { solvePow } from "./hashing.js";
import { PROGRESS_EVERY, SolveRequest, WorkerReply } from "./protocol.js";

export async function handleSolveRequest(
  request: SolveRequest,
  post: (reply: WorkerReply) => void,
): Promise<void> {
  const nonce = await solvePow({
    saltHex: request.salt,
    difficultyBits: request.difficulty_bits,
    startNonce: request.start_nonce,
    stride: request.stride,
    progressEvery: PROGRESS_EVERY,
    onProgress: (tried) => post({ kind: "progress", tried }),
  });
  post({ kind: "found", nonce });
}

type WorkerScope = {
  onmessage: ((event: MessageEvent<SolveRequest>) => void) | null;
  postMessage(reply: WorkerReply): void;
  document?: unknown;
};

const scope = globalThis as unknown as WorkerScope;

if (typeof scope.onmessage !== "undefined" && typeof scope.document === "undefined") {
  // Browser Web Worker context.
  scope.onmessage = (event) => {
    void handleSolveRequest(event.data, (reply) => scope.postMessage(reply));
  };
} else if (typeof process !== "undefined") {
  void import("node:worker_threads").then(({ parentPort }) => {
    if (parentPort) {
      parentPort.on("message", (request: SolveRequest) => {
        void handleSolveRequest(request, (reply) => parentPort.postMessage(reply));
      });
    }
  });
}
