// splitmix64, bit-compatible with the planner side so a seed means the
// same thing in both processes:
//   state += 0x9E3779B97F4A7C15 (mod 2^64)
//   z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27; z *= 0x94D049BB133111EB; z ^= z>>31
//   random() = top 53 bits / 2^53

const MASK = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;

function mix(z: bigint): bigint {
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
  return z ^ (z >> 31n);
}

export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK;
    return mix(this.state);
  }

  random(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }

  randint(lo: number, hi: number): number {
    if (hi < lo) throw new Error(`empty range [${lo}, ${hi}]`);
    const span = BigInt(hi - lo + 1);
    const limit = (1n << 64n) - ((1n << 64n) % span);
    for (;;) {
      const u = this.nextU64();
      if (u < limit) return lo + Number(u % span);
    }
  }

  // standard normal via Box-Muller
  normal(): number {
    const u = Math.max(this.random(), 1e-12);
    const v = this.random();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }

  // positive int31 for seeding layer initializers
  int32(): number {
    return Number(this.nextU64() & 0x7fffffffn);
  }

  // pick k distinct indices out of n, sorted ascending
  choose(n: number, k: number): number[] {
    const pool = Array.from({ length: n }, (_, i) => i);
    for (let i = n - 1; i > 0; i--) {
      const j = this.randint(0, i);
      [pool[i], pool[j]] = [pool[j], pool[i]];
    }
    return pool.slice(0, k).sort((a, b) => a - b);
  }
}

export function subseed(seed: number | bigint, index: number): bigint {
  return mix((BigInt(seed) & MASK) ^ ((BigInt(index) + 1n) * GAMMA & MASK));
}

// stable seed for one (seed, subnet, genes) training run
export function codingSeed(seed: number, subnet: number, genes: number[]): bigint {
  let s = subseed(seed, subnet);
  for (const g of genes) {
    s = mix((s ^ BigInt(g)) & MASK);
  }
  return s;
}
