import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // e2e cases spawn the python session server and run real-time paced
    // scenarios, so the budget is generous
    testTimeout: 40_000,
    hookTimeout: 20_000,
  },
});
