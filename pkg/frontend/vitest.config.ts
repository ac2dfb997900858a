import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    globalSetup: ["./test/e2e.setup.ts"],
    include: ["test/**/*.test.ts"],
  },
});
