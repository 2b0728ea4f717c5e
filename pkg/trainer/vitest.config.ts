import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 180_000,
    hookTimeout: 180_000,
    // tfjs state is global per process; keep runs deterministic
    fileParallelism: false,
  },
});
