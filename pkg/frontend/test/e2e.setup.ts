import { spawn } from "node:child_process";
import type { ChildProcessByStdio } from "node:child_process";
import type { Readable } from "node:stream";

// Boots the real scoring service on an ephemeral port for the e2e suite.
// Anything that goes wrong (no python3, import failure) provides an empty
// URL and the e2e tests skip instead of failing the unit suites.

const SERVE_SCRIPT = `
from ippsm.datasets import synthetic_leak
from ippsm.ngram import fit_ngram
from ippsm.service import make_server

est = fit_ngram(synthetic_leak(1500, seed=3), order=3)
srv = make_server(est, "127.0.0.1", 0)
print(f"PORT {srv.server_address[1]}", flush=True)
srv.serve_forever()
`;

let child: ChildProcessByStdio<null, Readable, Readable> | null = null;

function waitForPort(proc: NonNullable<typeof child>, timeoutMs: number): Promise<string> {
  return new Promise((resolve) => {
    let buffer = "";
    let settled = false;
    const timer = setTimeout(() => finish(""), timeoutMs);
    const finish = (url: string) => {
      if (settled) return;
      settled = true;
      clearTimeout(timer);
      resolve(url);
    };
    proc.stdout.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const m = buffer.match(/PORT (\d+)/);
      if (m) finish(`http://127.0.0.1:${m[1]}`);
    });
    proc.stderr.on("data", () => undefined); // keep the pipe drained
    proc.on("exit", () => finish(""));
    proc.on("error", () => finish(""));
  });
}

interface SetupContext {
  provide: (key: "e2eUrl", value: string) => void;
}

export default async function setup(ctx: SetupContext): Promise<() => void> {
  let url = "";
  try {
    child = spawn("python3", ["-c", SERVE_SCRIPT], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    url = await waitForPort(child, 60_000);
  } catch {
    url = "";
  }
  if (!url) {
    console.warn("e2e setup: scoring service unavailable, e2e tests will skip");
  }
  ctx.provide("e2eUrl", url);
  return () => {
    child?.kill();
    child = null;
  };
}
