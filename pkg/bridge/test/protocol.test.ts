/**
 * Protocol behavior: in-process via handleLine, then end to end against the
 * built dist/serve.js (pretest builds it).
 */

import { describe, expect, it } from "vitest";
import { spawn } from "node:child_process";
import { join, resolve } from "node:path";
import { DummyWorldEvaluator } from "../src/evaluator.js";
import { PROTOCOL_VERSION, handleLine } from "../src/protocol.js";

const FIXTURES = resolve(__dirname, "fixtures");
const SERVE = resolve(__dirname, "../dist/serve.js");
const WORLD = join(FIXTURES, "world.json");

const evaluator = DummyWorldEvaluator.fromFile(WORLD);

function req(payload: unknown): Record<string, unknown> | null {
  return handleLine(evaluator, JSON.stringify(payload));
}

describe("handleLine", () => {
  it("answers hello with the protocol version and world metadata", () => {
    const r = req({ id: 1, op: "hello" })!;
    expect(r).toMatchObject({
      id: 1,
      ok: true,
      version: PROTOCOL_VERSION,
      dim: 10,
      embedding_dim: 10,
    });
    expect(r.labels).toEqual(["Nova", "Orion", "Lyra", "Vega"]);
  });

  it("echoes the request id on evaluate", () => {
    const latent = new Array(10).fill(0.1);
    const r = req({ id: 42, op: "evaluate", space: "Z", latent })!;
    expect(r.id).toBe(42);
    expect(r.ok).toBe(true);
    expect(typeof r.face).toBe("boolean");
  });

  it("skips blank lines", () => {
    expect(handleLine(evaluator, "")).toBeNull();
    expect(handleLine(evaluator, "   ")).toBeNull();
  });

  it("refuses garbage without an id", () => {
    const r = handleLine(evaluator, "%%% not json %%%")!;
    expect(r.ok).toBe(false);
    expect(r.id).toBeUndefined();
    expect(String(r.error)).toContain("JSON");
  });

  it("refuses requests without an integer id", () => {
    expect(req({ op: "hello" })!.ok).toBe(false);
    expect(req({ id: "seven", op: "hello" })!.ok).toBe(false);
    expect(req([1, 2, 3])!.ok).toBe(false);
  });

  it("refuses unknown ops but keeps the id", () => {
    const r = req({ id: 9, op: "shutdown" })!;
    expect(r).toMatchObject({ id: 9, ok: false });
    expect(String(r.error)).toContain("shutdown");
  });

  it("refuses evaluate with the wrong space or shape", () => {
    const latent = new Array(10).fill(0.0);
    expect(String(req({ id: 2, op: "evaluate", space: "W", latent })!.error)).toContain(
      "space"
    );
    expect(
      req({ id: 3, op: "evaluate", space: "Z", latent: latent.slice(0, 4) })!.ok
    ).toBe(false);
    expect(req({ id: 4, op: "evaluate", space: "Z", latent: "nope" })!.ok).toBe(false);
    expect(
      req({ id: 5, op: "evaluate", space: "Z", latent: [...latent.slice(1), "x"] })!.ok
    ).toBe(false);
  });
});

interface ChildResult {
  code: number | null;
  lines: Record<string, unknown>[];
}

function runServer(args: string[], input: string[]): Promise<ChildResult> {
  return new Promise((resolveRun, reject) => {
    const child = spawn(process.execPath, [SERVE, ...args], { stdio: "pipe" });
    let out = "";
    child.stdout.on("data", (chunk) => (out += chunk));
    child.on("error", reject);
    child.on("close", (code) => {
      resolveRun({
        code,
        lines: out
          .split("\n")
          .filter((l) => l.trim())
          .map((l) => JSON.parse(l)),
      });
    });
    child.stdin.write(input.map((l) => l + "\n").join(""));
    child.stdin.end();
  });
}

describe("serve.js", () => {
  it("serves in order, survives garbage, exits 0 on end-of-stream", async () => {
    const latent = JSON.stringify(new Array(10).fill(0.2));
    const { code, lines } = await runServer(["--world", WORLD], [
      '{"id": 1, "op": "hello"}',
      "%%% not json %%%",
      `{"id": 2, "op": "evaluate", "space": "Z", "latent": ${latent}}`,
      `{"id": 3, "op": "evaluate", "space": "Z", "latent": ${latent}}`,
    ]);
    expect(code).toBe(0);
    expect(lines.length).toBe(4);
    expect(lines[0]).toMatchObject({ id: 1, ok: true, version: "1" });
    expect(lines[1].ok).toBe(false);
    expect(lines[2]).toMatchObject({ id: 2, ok: true });
    expect(lines[3]).toMatchObject({ id: 3, ok: true });
    // identical latents, identical verdicts
    expect(lines[3].embedding).toEqual(lines[2].embedding);
  });

  it("runs the stub protocol skeleton without a world", async () => {
    const { code, lines } = await runServer(
      ["--stub", "--dim", "6", "--embedding-dim", "3", "--labels", "L1,L2"],
      [
        '{"id": 1, "op": "hello"}',
        `{"id": 2, "op": "evaluate", "space": "Z", "latent": ${JSON.stringify(
          new Array(6).fill(0)
        )}}`,
      ]
    );
    expect(code).toBe(0);
    expect(lines[0]).toMatchObject({
      id: 1,
      ok: true,
      version: "1",
      dim: 6,
      embedding_dim: 3,
      labels: ["L1", "L2"],
    });
    expect(lines[1]).toMatchObject({ id: 2, ok: false });
    expect(String(lines[1].error)).toContain("no model attached");
  });

  it("exits 64 on usage errors", async () => {
    const { code } = await runServer([], []);
    expect(code).toBe(64);
    const bad = await runServer(["--world", "/no/such/file.json"], []);
    expect(bad.code).toBe(64);
  });
});
