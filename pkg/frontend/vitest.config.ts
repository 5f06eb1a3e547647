import { defineConfig } from "vitest/config";

// The round-trip suite spawns the real Python service, so hooks and
// tests get generous timeouts.
export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    testTimeout: 120_000,
    hookTimeout: 240_000,
  },
});
