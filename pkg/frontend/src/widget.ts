/**
 * Embeddable CAPTCHA widget.
 *
 * mount() renders a status area into the host container and runs the whole
 * flow automatically: fetch a PoW puzzle, solve it in a background worker
 * ("Securing… please wait"), verify, then show the 2x3 tile grid and submit
 * the user's selection. The host gets one completion callback with
 * {passed}. Network failures surface as a retry button, never raw errors.
 */
import { meetsDifficulty } from "./hashing.js";
import {
  ImageChallengeView,
  PowChallengeView,
  SolveRequest,
  WorkerReply,
} from "./protocol.js";
import { WidgetState } from "./state.js";

export interface WorkerLike {
  postMessage(request: SolveRequest): void;
  set onmessage(handler: (event: { data: WorkerReply }) => void);
  terminate(): void;
}

export interface MountOptions {
  onComplete?: (result: { passed: boolean }) => void;
  /** Test seam; defaults to a real Web Worker running worker.js. */
  workerFactory?: () => WorkerLike;
  fetchImpl?: typeof fetch;
}

export interface WidgetHandle {
  state: WidgetState;
  destroy(): void;
}

const MOUNTED_FLAG = "powcaptchaMounted";

export function mount(
  container: HTMLElement,
  baseUrl: string,
  options: MountOptions = {},
): WidgetHandle {
  if (container.dataset[MOUNTED_FLAG] === "1") {
    throw new Error("powcaptcha widget already mounted on this container");
  }
  container.dataset[MOUNTED_FLAG] = "1";

  const doFetch = options.fetchImpl ?? fetch.bind(globalThis);
  const makeWorker =
    options.workerFactory ??
    (() =>
      new Worker(new URL("./worker.js", import.meta.url), {
        type: "module",
      }) as unknown as WorkerLike);

  const state = new WidgetState();
  let worker: WorkerLike | null = null;
  let destroyed = false;

  const root = container.ownerDocument.createElement("div");
  root.className = "powcaptcha";
  container.appendChild(root);

  state.subscribe(() => render());

  function stopWorker(): void {
    if (worker) {
      worker.terminate();
      worker = null;
    }
  }

  function finish(passed: boolean): void {
    state.transition(passed ? "passed" : "denied");
    options.onComplete?.({ passed });
  }

  async function begin(): Promise<void> {
    state.transition("fetching");
    let pow: PowChallengeView;
    try {
      const resp = await doFetch(`${baseUrl}/api/pow-challenge`, {
        credentials: "include",
      });
      if (!resp.ok) throw new Error(`status ${resp.status}`);
      pow = (await resp.json()) as PowChallengeView;
    } catch {
      state.transition("denied");
      return;
    }
    if (destroyed) return;

    state.transition("solving");
    worker = makeWorker();
    worker.onmessage = (event) => {
      const reply = event.data;
      if (reply.kind === "progress") {
        state.progress(reply.tried);
      } else {
        stopWorker();
        void verify(pow, reply.nonce);
      }
    };
    worker.postMessage({
      salt: pow.salt,
      difficulty_bits: pow.difficulty_bits,
      start_nonce: 0,
      stride: 1,
    });
  }

  async function verify(pow: PowChallengeView, nonce: number): Promise<void> {
    if (destroyed) return;
    state.transition("verifying");
    // Recompute once on the page side before trusting the worker's find.
    if (!(await meetsDifficulty(pow.salt, nonce, pow.difficulty_bits))) {
      state.transition("denied");
      return;
    }
    try {
      const verifyResp = await doFetch(`${baseUrl}/api/pow-verify`, {
        method: "POST",
        credentials: "include",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ challenge_id: pow.challenge_id, nonce }),
      });
      if (!verifyResp.ok) {
        state.transition("denied");
        return;
      }
      const { token } = (await verifyResp.json()) as { token: string };
      const challengeResp = await doFetch(
        `${baseUrl}/api/challenge?token=${token}`,
        { credentials: "include" },
      );
      if (!challengeResp.ok) {
        state.transition("denied");
        return;
      }
      const challenge = (await challengeResp.json()) as ImageChallengeView;
      if (destroyed) return;
      state.transition("challenge", challenge);
    } catch {
      state.transition("denied");
    }
  }

  async function submit(): Promise<void> {
    const challenge = state.challenge;
    if (!challenge) return;
    const selections = [...state.selections].sort((a, b) => a - b);
    state.transition("submitting");
    try {
      const resp = await doFetch(`${baseUrl}/api/answer`, {
        method: "POST",
        credentials: "include",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ captcha_id: challenge.captcha_id, selections }),
      });
      if (!resp.ok) throw new Error(`status ${resp.status}`);
      const verdict = (await resp.json()) as { pass: boolean };
      finish(verdict.pass);
    } catch {
      // Network failure: back to the grid with tiles preserved.
      state.transition("challenge");
    }
  }

  function render(): void {
    const doc = container.ownerDocument;
    root.textContent = "";
    switch (state.phase) {
      case "idle":
      case "fetching":
        root.appendChild(status(doc, "Loading…"));
        break;
      case "solving":
      case "verifying":
        root.appendChild(status(doc, "Securing… please wait"));
        break;
      case "challenge": {
        const challenge = state.challenge!;
        const prompt = doc.createElement("p");
        prompt.className = "powcaptcha-prompt";
        prompt.textContent = challenge.prompt;
        root.appendChild(prompt);
        const grid = doc.createElement("div");
        grid.className = "powcaptcha-grid"; // styled as 2 rows x 3 columns
        challenge.tiles.forEach((tileUrl, index) => {
          const tile = doc.createElement("button");
          tile.type = "button";
          tile.className = "powcaptcha-tile";
          if (state.selections.has(index)) tile.classList.add("selected");
          const img = doc.createElement("img");
          img.src = new URL(tileUrl, baseUrl || doc.baseURI).toString();
          img.alt = `tile ${index + 1}`;
          tile.appendChild(img);
          tile.addEventListener("click", () => state.toggleTile(index));
          grid.appendChild(tile);
        });
        root.appendChild(grid);
        const submitButton = doc.createElement("button");
        submitButton.type = "button";
        submitButton.className = "powcaptcha-submit";
        submitButton.textContent = "Verify";
        submitButton.addEventListener("click", () => void submit());
        root.appendChild(submitButton);
        break;
      }
      case "submitting":
        root.appendChild(status(doc, "Checking…"));
        break;
      case "passed":
        root.appendChild(status(doc, "Verified"));
        break;
      case "denied": {
        root.appendChild(status(doc, "Verification failed."));
        const retry = doc.createElement("button");
        retry.type = "button";
        retry.className = "powcaptcha-retry";
        retry.textContent = "Try again";
        retry.addEventListener("click", () => void begin());
        root.appendChild(retry);
        break;
      }
    }
  }

  function status(doc: Document, text: string): HTMLElement {
    const el = doc.createElement("p");
    el.className = "powcaptcha-status";
    el.textContent = text;
    return el;
  }

  render();
  queueMicrotask(() => void begin());

  return {
    state,
    destroy() {
      destroyed = true;
      stopWorker();
      root.remove();
      delete container.dataset[MOUNTED_FLAG];
    },
  };
}
