/** Line-delimited JSON protocol server over stdio or TCP.
 *
 * Requests: {"id": ..., "kind": "score" | "wsd", "items": [...]};
 * responses: {"id": ..., "scores": [...]} with one entry per item, or
 * {"id": ..., "error": "..."} when the backend fails. Requests are
 * answered in arrival order; clients match responses by id.
 */

import * as net from "net";
import * as readline from "readline";

export type Handler = (kind: string, items: unknown[]) => Array<number | null>;

interface Request {
  id: unknown;
  kind?: string;
  items?: unknown[];
}

export function handleLine(line: string, handler: Handler): string | null {
  const trimmed = line.trim();
  if (!trimmed) return null;
  let request: Request;
  try {
    request = JSON.parse(trimmed);
  } catch {
    return null; // unaddressable; the client times out and retries
  }
  if (request.id === undefined || request.id === null) return null;
  try {
    const scores = handler(request.kind ?? "", request.items ?? []);
    return JSON.stringify({ id: request.id, scores });
  } catch (error) {
    return JSON.stringify({
      id: request.id,
      error: error instanceof Error ? error.message : String(error),
    });
  }
}

export function serveStdio(handler: Handler): void {
  const rl = readline.createInterface({ input: process.stdin });
  rl.on("line", (line) => {
    const response = handleLine(line, handler);
    if (response !== null) process.stdout.write(response + "\n");
  });
}

export function serveTcp(handler: Handler, port: number): net.Server {
  const server = net.createServer((socket) => {
    const rl = readline.createInterface({ input: socket });
    rl.on("line", (line) => {
      const response = handleLine(line, handler);
      if (response !== null) socket.write(response + "\n");
    });
    socket.on("error", () => socket.destroy());
  });
  server.listen(port);
  return server;
}
