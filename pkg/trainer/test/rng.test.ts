import { describe, expect, it } from "vitest";
import { SplitMix64, codingSeed, subseed } from "../src/rng";

describe("SplitMix64", () => {
  it("matches the frozen reference vector for seed 1234567", () => {
    const rng = new SplitMix64(1234567);
    expect([rng.nextU64(), rng.nextU64(), rng.nextU64()]).toEqual([
      6457827717110365317n,
      3203168211198807973n,
      9817491932198370423n,
    ]);
  });

  it("is deterministic per seed", () => {
    const a = new SplitMix64(42);
    const b = new SplitMix64(42);
    for (let i = 0; i < 100; i++) {
      expect(a.nextU64()).toBe(b.nextU64());
    }
  });

  it("random() stays in [0, 1)", () => {
    const rng = new SplitMix64(9);
    for (let i = 0; i < 1000; i++) {
      const x = rng.random();
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThan(1);
    }
  });

  it("randint() covers the inclusive range", () => {
    const rng = new SplitMix64(3);
    const seen = new Set<number>();
    for (let i = 0; i < 200; i++) {
      const x = rng.randint(2, 5);
      expect(x).toBeGreaterThanOrEqual(2);
      expect(x).toBeLessThanOrEqual(5);
      seen.add(x);
    }
    expect(seen.size).toBe(4);
  });

  it("choose() returns k distinct sorted indices below n", () => {
    const rng = new SplitMix64(7);
    for (let trial = 0; trial < 50; trial++) {
      const picked = rng.choose(10, 4);
      expect(picked).toHaveLength(4);
      expect([...picked].sort((a, b) => a - b)).toEqual(picked);
      expect(new Set(picked).size).toBe(4);
      picked.forEach((i) => {
        expect(i).toBeGreaterThanOrEqual(0);
        expect(i).toBeLessThan(10);
      });
    }
  });

  it("int32() is a positive 31-bit value", () => {
    const rng = new SplitMix64(11);
    for (let i = 0; i < 100; i++) {
      const x = rng.int32();
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(0x7fffffff);
      expect(Number.isInteger(x)).toBe(true);
    }
  });
});

describe("derived seeds", () => {
  it("subseed() produces distinct streams per index", () => {
    const seeds = new Set<bigint>();
    for (let i = 0; i < 64; i++) seeds.add(subseed(5, i));
    expect(seeds.size).toBe(64);
  });

  it("codingSeed() changes with seed, subnet and genes", () => {
    const base = codingSeed(1, 0, [4, 4]);
    expect(codingSeed(1, 0, [4, 4])).toBe(base);
    expect(codingSeed(2, 0, [4, 4])).not.toBe(base);
    expect(codingSeed(1, 1, [4, 4])).not.toBe(base);
    expect(codingSeed(1, 0, [4, 3])).not.toBe(base);
    expect(codingSeed(1, 0, [4, 4, 4])).not.toBe(base);
  });
});
