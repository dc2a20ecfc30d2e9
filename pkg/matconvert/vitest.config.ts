import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // full-size corpus fixtures take a while to synthesize and filter
    testTimeout: 300_000,
    hookTimeout: 60_000,
  },
});
