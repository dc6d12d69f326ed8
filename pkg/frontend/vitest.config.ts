import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // The latency and heartbeat tests measure wall-clock behavior; running
    // files in parallel would let sibling suites steal their CPU.
    fileParallelism: false,
    testTimeout: 15_000,
  },
});
