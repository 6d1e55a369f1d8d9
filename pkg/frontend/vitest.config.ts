import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    // the differential suite shells out to the CLI two thousand times
    testTimeout: 600_000,
    hookTimeout: 60_000,
  },
});
