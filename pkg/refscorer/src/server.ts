// HTTP scoring service.
//
// Wire contract: POST /score with raw image bytes (Content-Type image/png
// or image/jpeg) answers 200 with exactly {"score": <number in [0, 1]>}.
// Broken mode answers 500 on every request to exercise the evaluator's
// error-handling path.
import * as http from "node:http";
import { AddressInfo } from "node:net";

import { Mode, noisyScore, oracleScore } from "./scorer";

export interface ServerOptions {
  mode: Mode;
  sigma: number;
  value: number;
  port: number;
}

export const DEFAULTS: ServerOptions = {
  mode: "oracle",
  sigma: 0.1,
  value: 0.5,
  port: 8787,
};

export function createScoreServer(opts: ServerOptions): http.Server {
  return http.createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk: Buffer) => chunks.push(chunk));
    req.on("end", () => {
      if (req.method !== "POST" || req.url !== "/score") {
        res.writeHead(404, { "Content-Type": "application/json" });
        res.end(JSON.stringify({ error: "not found" }));
        return;
      }
      if (opts.mode === "broken") {
        res.writeHead(500, { "Content-Type": "text/plain" });
        res.end("internal error");
        return;
      }
      const body = Buffer.concat(chunks);
      let score: number;
      switch (opts.mode) {
        case "oracle":
          score = oracleScore(body);
          break;
        case "noisy":
          score = noisyScore(body, opts.sigma);
          break;
        case "constant":
          score = opts.value;
          break;
      }
      const payload = JSON.stringify({ score });
      res.writeHead(200, {
        "Content-Type": "application/json",
        "Content-Length": Buffer.byteLength(payload),
      });
      res.end(payload);
    });
  });
}

export function parseArgs(argv: string[]): ServerOptions {
  const opts = { ...DEFAULTS };
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) throw new Error(`missing value for ${flag}`);
    switch (flag) {
      case "--mode":
        if (!["oracle", "noisy", "constant", "broken"].includes(value)) {
          throw new Error(`unknown mode ${value}`);
        }
        opts.mode = value as Mode;
        break;
      case "--sigma":
        opts.sigma = Number(value);
        break;
      case "--value":
        opts.value = Number(value);
        break;
      case "--port":
        opts.port = Number(value);
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!Number.isFinite(opts.sigma) || opts.sigma < 0) {
    throw new Error("--sigma must be a number >= 0");
  }
  if (!Number.isFinite(opts.value) || opts.value < 0 || opts.value > 1) {
    throw new Error("--value must be in [0, 1]");
  }
  if (!Number.isInteger(opts.port) || opts.port < 0) {
    throw new Error("--port must be a non-negative integer");
  }
  return opts;
}

export function main(argv: string[]): void {
  let opts: ServerOptions;
  try {
    opts = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    console.error(
      "usage: node server.js [--mode oracle|noisy|constant|broken] " +
        "[--sigma S] [--value C] [--port P]"
    );
    process.exit(2);
  }
  const server = createScoreServer(opts);
  server.on("error", (err) => {
    console.error(`startup failed: ${String(err)}`);
    process.exit(1);
  });
  server.listen(opts.port, "127.0.0.1", () => {
    const address = server.address() as AddressInfo;
    // Single ready line; harnesses parse it for the bound port.
    console.log(
      `refscorer listening on 127.0.0.1:${address.port} mode=${opts.mode}`
    );
  });
}

if (require.main === module) {
  main(process.argv.slice(2));
}
