/**
 * Transports for one episode session: a spawned server child process talking
 * over stdio, or a TCP connection to a listening server. Requests and
 * responses strictly alternate; concurrent sends queue behind each other.
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import net from "node:net";
import type { Readable, Writable } from "node:stream";

import {
  encodeFrame,
  LineDecoder,
  parseServerFrame,
  ProtocolError,
  type RequestFrame,
  type ServerFrame,
  TransportError,
} from "./protocol.js";

export interface Transport {
  request(frame: RequestFrame): Promise<ServerFrame>;
  close(): Promise<void>;
}

class PendingQueue {
  private waiters: Array<{
    resolve: (frame: ServerFrame) => void;
    reject: (err: Error) => void;
  }> = [];

  expect(): Promise<ServerFrame> {
    return new Promise((resolve, reject) => {
      this.waiters.push({ resolve, reject });
    });
  }

  deliver(frame: ServerFrame): void {
    const waiter = this.waiters.shift();
    if (!waiter) {
      throw new ProtocolError("unsolicited frame from server");
    }
    waiter.resolve(frame);
  }

  fail(err: Error): void {
    while (this.waiters.length > 0) {
      this.waiters.shift()!.reject(err);
    }
  }
}

/** Spawn `command args...` and speak the protocol over its stdio. */
export class StdioTransport implements Transport {
  private child: ChildProcessByStdio<Writable, Readable, null>;
  private decoder = new LineDecoder();
  private pending = new PendingQueue();
  private chain: Promise<unknown> = Promise.resolve();

  constructor(command: string, args: string[]) {
    this.child = spawn(command, args, { stdio: ["pipe", "pipe", "inherit"] });
    this.child.stdout.on("data", (chunk: Buffer) => {
      for (const line of this.decoder.push(chunk)) {
        this.pending.deliver(parseServerFrame(line));
      }
    });
    this.child.on("exit", (code) => {
      this.pending.fail(new TransportError(`server exited with code ${code}`));
    });
    this.child.on("error", (err) => {
      this.pending.fail(new TransportError(`spawn failed: ${err.message}`));
    });
  }

  request(frame: RequestFrame): Promise<ServerFrame> {
    const run = this.chain.then(() => {
      const reply = this.pending.expect();
      if (!this.child.stdin.write(encodeFrame(frame))) {
        // backpressure is fine; the kernel buffers the single frame
      }
      return reply;
    });
    this.chain = run.catch(() => undefined);
    return run;
  }

  async close(): Promise<void> {
    try {
      await this.request({ cmd: "close" });
    } catch {
      // the server may already be gone
    }
    this.child.stdin.end();
    if (this.child.exitCode === null) {
      await new Promise((resolve) => this.child.once("exit", resolve));
    }
  }
}

/** Connect to a server listening on TCP. */
export class TcpTransport implements Transport {
  private socket: net.Socket;
  private decoder = new LineDecoder();
  private pending = new PendingQueue();
  private chain: Promise<unknown> = Promise.resolve();
  private connected: Promise<void>;

  constructor(host: string, port: number) {
    this.socket = net.createConnection({ host, port });
    this.connected = new Promise((resolve, reject) => {
      this.socket.once("connect", () => resolve());
      this.socket.once("error", (err) =>
        reject(new TransportError(`connect failed: ${err.message}`)),
      );
    });
    this.socket.on("data", (chunk: Buffer) => {
      for (const line of this.decoder.push(chunk)) {
        this.pending.deliver(parseServerFrame(line));
      }
    });
    this.socket.on("close", () => {
      this.pending.fail(new TransportError("connection closed"));
    });
  }

  request(frame: RequestFrame): Promise<ServerFrame> {
    const run = this.chain.then(async () => {
      await this.connected;
      const reply = this.pending.expect();
      this.socket.write(encodeFrame(frame));
      return reply;
    });
    this.chain = run.catch(() => undefined);
    return run;
  }

  async close(): Promise<void> {
    try {
      await this.request({ cmd: "close" });
    } catch {
      // already closed is fine
    }
    this.socket.end();
  }
}

export interface SpawnOptions {
  python?: string;
  configPath: string;
  extraArgs?: string[];
}

/** Convenience: spawn `python -m lodegen serve --transport stdio`. */
export function spawnServer(options: SpawnOptions): StdioTransport {
  const python = options.python ?? "python3";
  return new StdioTransport(python, [
    "-m",
    "lodegen",
    "serve",
    "--config",
    options.configPath,
    "--transport",
    "stdio",
    ...(options.extraArgs ?? []),
  ]);
}
