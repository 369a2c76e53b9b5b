import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globals: true,
    environment: "node",
    include: ["tests/**/*.test.ts"],
    testTimeout: 30_000,
    hookTimeout: 120_000,
    // The e2e file owns a live service; keep files sequential so unit runs
    // never contend with it for the shared store.
    fileParallelism: false,
  },
});
