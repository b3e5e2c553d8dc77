import type { IOptionalBrowserSettings } from "happy-dom";
import { defineConfig } from "vitest/config";

// The demo page references its compiled script; tests only need the
// markup, so file loading stays off.  Checked against happy-dom's own
// settings type because the copy bundled with vitest lags behind it.
const domSettings: IOptionalBrowserSettings = {
  disableJavaScriptFileLoading: true,
  disableJavaScriptEvaluation: true,
  disableCSSFileLoading: true,
  handleDisabledFileLoadingAsSuccess: true,
};

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        settings: domSettings as Record<string, boolean>,
      },
    },
    include: ["tests/**/*.test.ts"],
  },
});
