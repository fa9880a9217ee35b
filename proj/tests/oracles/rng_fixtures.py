"""Independent reference for the RNG streams and sine task sampler.

Prints C++ initializers that are pasted into test_tasks.cpp.
"""

M64 = (1 << 64) - 1


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & M64
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & M64
        self.index = 312

    def twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def __call__(self):
        if self.index >= 312:
            self.twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & M64


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & M64
    return x ^ (x >> 31)


def derive_seed(seed, path):
    s = splitmix64(seed)
    for p in path:
        s = splitmix64(s ^ splitmix64((p + 0x632BE59BD9B4E019) & M64))
    return s


def uniform(gen, lo=0.0, hi=1.0):
    return lo + (hi - lo) * ((gen() >> 11) * 2.0**-53)


def sine_task(seed, k):
    import math
    g = MT19937_64(seed)
    a = uniform(g, 0.1, 5.0)
    f = uniform(g, 0.8, 1.2)
    ph = uniform(g, 0.0, 3.14159265358979323846)
    xs = [uniform(g, -5.0, 5.0) for _ in range(k + 10)]
    return a, f, ph, xs, [a * math.sin(f * x + ph) for x in xs]


if __name__ == "__main__":
    g = MT19937_64(5489)
    for _ in range(9999):
        g()
    print("mt19937_64 default seed, 10000th output:", g())
    print("derive_seed(42, {2, 0, 0}) =", derive_seed(42, [2, 0, 0]))
    print("derive_seed(0, {}) =", derive_seed(0, []))
    s = derive_seed(42, [2, 0, 0])
    a, f, ph, xs, ys = sine_task(s, 5)
    print("A, nu, phi =", repr(a), repr(f), repr(ph))
    print("x =", ", ".join(repr(x) for x in xs))
    print("y[0], y[14] =", repr(ys[0]), repr(ys[14]))
