import {
  type Inbound,
  type Outbound,
  parseInbound,
  serializeOutbound,
} from "./protocol.js";

/** Minimal websocket surface; satisfied by both browser WebSocket and ws. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "close", listener: () => void): void;
  addEventListener(type: "message", listener: (ev: { data: unknown }) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ReplayResult {
  /** One entry per outbound message, in order. */
  replies: Inbound[];
  /** Raw frames that failed to parse (logged, skipped). */
  malformed: string[];
}

function openSocket(factory: SocketFactory, url: string): Promise<SocketLike> {
  return new Promise((resolve, reject) => {
    const socket = factory(url);
    let settled = false;
    socket.addEventListener("open", () => {
      settled = true;
      resolve(socket);
    });
    socket.addEventListener("close", () => {
      if (!settled) reject(new Error(`connection to ${url} closed before open`));
    });
  });
}

/**
 * Headless client: replay a recorded outbound stream against a live
 * service, strictly sequentially — each message waits for its reply, so
 * the one-reply-per-sample contract is observable in the result.
 */
export async function replayStroke(
  url: string,
  messages: Outbound[],
  factory: SocketFactory,
  timeoutMs = 5000,
): Promise<ReplayResult> {
  const socket = await openSocket(factory, url);
  const inbox: string[] = [];
  let wake: (() => void) | null = null;
  socket.addEventListener("message", (ev) => {
    inbox.push(String(ev.data));
    wake?.();
  });

  const nextFrame = async (): Promise<string> => {
    const deadline = Date.now() + timeoutMs;
    while (inbox.length === 0) {
      if (Date.now() > deadline) throw new Error("timed out waiting for a reply");
      await new Promise<void>((resolve) => {
        wake = resolve;
        setTimeout(resolve, 20);
      });
      wake = null;
    }
    return inbox.shift()!;
  };

  const result: ReplayResult = { replies: [], malformed: [] };
  try {
    for (const msg of messages) {
      socket.send(serializeOutbound(msg));
      const raw = await nextFrame();
      const parsed = parseInbound(raw);
      if (parsed === null) {
        result.malformed.push(raw);
      } else {
        result.replies.push(parsed);
      }
    }
  } finally {
    socket.close();
  }
  return result;
}
