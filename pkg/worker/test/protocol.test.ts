import { describe, expect, it } from "vitest";

import {
  OPERATION_KINDS,
  ProtocolError,
  extractId,
  parseRequest,
  serializeResponse,
} from "../src/protocol";

const VALID = JSON.stringify({
  id: 7,
  policy: [
    [
      ["Invert", 5, 0],
      ["Rotate", 10, 9],
    ],
  ],
  seed: 3,
});

describe("parseRequest", () => {
  it("accepts a well-formed request", () => {
    const req = parseRequest(VALID);
    expect(req.id).toBe(7);
    expect(req.seed).toBe(3);
    expect(req.policy).toHaveLength(1);
    expect(req.train_size).toBeUndefined();
  });

  it("accepts an optional train_size", () => {
    const req = parseRequest(
      JSON.stringify({ id: 1, policy: [[["Equalize", 0, 0], ["Equalize", 0, 0]]], seed: 0, train_size: 200 }),
    );
    expect(req.train_size).toBe(200);
  });

  it("accepts every operation kind", () => {
    for (const kind of OPERATION_KINDS) {
      const line = JSON.stringify({ id: 0, policy: [[[kind, 5, 5], [kind, 5, 5]]], seed: 0 });
      expect(parseRequest(line).policy[0][0][0]).toBe(kind);
    }
  });

  it.each([
    ["not JSON", "{nope"],
    ["missing id", JSON.stringify({ policy: [[["Invert", 5, 0], ["Invert", 5, 0]]], seed: 0 })],
    ["missing seed", JSON.stringify({ id: 1, policy: [[["Invert", 5, 0], ["Invert", 5, 0]]] })],
    ["empty policy", JSON.stringify({ id: 1, policy: [], seed: 0 })],
    ["one op per sub-policy", JSON.stringify({ id: 1, policy: [[["Invert", 5, 0]]], seed: 0 })],
    ["unknown kind", JSON.stringify({ id: 1, policy: [[["Blur", 5, 0], ["Invert", 5, 0]]], seed: 0 })],
    ["probability over 10", JSON.stringify({ id: 1, policy: [[["Invert", 11, 0], ["Invert", 5, 0]]], seed: 0 })],
    ["magnitude over 9", JSON.stringify({ id: 1, policy: [[["Invert", 5, 10], ["Invert", 5, 0]]], seed: 0 })],
    ["negative magnitude", JSON.stringify({ id: 1, policy: [[["Invert", 5, -1], ["Invert", 5, 0]]], seed: 0 })],
    ["fractional id", JSON.stringify({ id: 1.5, policy: [[["Invert", 5, 0], ["Invert", 5, 0]]], seed: 0 })],
    ["zero train_size", JSON.stringify({ id: 1, policy: [[["Invert", 5, 0], ["Invert", 5, 0]]], seed: 0, train_size: 0 })],
  ])("rejects %s", (_label, line) => {
    expect(() => parseRequest(line)).toThrow(ProtocolError);
  });
});

describe("extractId", () => {
  it("recovers the id from an otherwise invalid request", () => {
    expect(extractId(JSON.stringify({ id: 42, policy: "bogus" }))).toBe(42);
  });

  it("returns null when the line is not JSON", () => {
    expect(extractId("{nope")).toBeNull();
  });

  it("returns null when id is not an integer", () => {
    expect(extractId(JSON.stringify({ id: "seven" }))).toBeNull();
  });
});

describe("serializeResponse", () => {
  it("round-trips a reward response", () => {
    expect(JSON.parse(serializeResponse({ id: 3, reward: 0.5 }))).toEqual({ id: 3, reward: 0.5 });
  });

  it("round-trips an error response with null id", () => {
    expect(JSON.parse(serializeResponse({ id: null, error: "bad" }))).toEqual({ id: null, error: "bad" });
  });
});
