//! Counter-based random number streams.
//!
//! Every random quantity in this crate is a pure function of
//! `(master_seed, stream, counter)`. Streams never share mutable state, so
//! trials can run on any number of threads in any order and still reproduce
//! bit-for-bit. A stream is keyed by a scope (which process in a coupling,
//! or which trial in an ensemble) and a channel (which Poisson clock).
//!
//! The generator is a SplitMix64-style finalizer applied to the counter
//! under a per-stream key. Not cryptographic; statistical quality is plenty
//! for Monte Carlo.

/// Avalanching 64-bit finalizer (the SplitMix64 output function).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const SCOPE_SALT: u64 = 0xd1b5_4a32_d192_ed03;
const CHANNEL_SALT: u64 = 0x8cb9_2ba7_2f3d_8dd7;

/// Derive a 64-bit stream key from `(master_seed, scope, channel)`.
#[inline]
pub fn stream_key(master_seed: u64, scope: u64, channel: u64) -> u64 {
    mix64(
        master_seed
            ^ mix64(scope.wrapping_mul(SCOPE_SALT))
            ^ mix64(channel.wrapping_mul(CHANNEL_SALT)),
    )
}

/// A stateless counter-mode generator: output `i` is `mix64(key + i*GOLDEN)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(master_seed: u64, scope: u64, channel: u64) -> Self {
        CounterRng {
            key: stream_key(master_seed, scope, channel),
            counter: 0,
        }
    }

    /// A fresh stream from a bare seed (scope 0, channel 0).
    pub fn from_seed(seed: u64) -> Self {
        CounterRng::new(seed, 0, 0)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let x = mix64(self.key ^ self.counter.wrapping_mul(GOLDEN));
        self.counter = self.counter.wrapping_add(1);
        x
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        // 53 significant bits, offset half a ulp away from both endpoints.
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Exponential variate with the given rate (inverse CDF).
    #[inline]
    pub fn next_exp(&mut self, rate: f64) -> f64 {
        debug_assert!(rate > 0.0);
        -self.next_f64().ln() / rate
    }
}

/// Identifier of a Poisson clock in the open-boundary geometry.
///
/// Edge `x` joins sites `x` and `x+1` (1-based). Codes are stable under
/// window growth: adding sites adds channels without renumbering old ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    /// Rate-alpha reservoir clock at site 1.
    Enter,
    /// Rate-gamma reservoir clock at site 1.
    Exit,
    /// Rate-1 clock on edge `x` (rightward attempt).
    EdgeFwd(u32),
    /// Rate-q clock on edge `x` (leftward attempt).
    EdgeBwd(u32),
}

impl Channel {
    #[inline]
    pub fn code(self) -> u64 {
        match self {
            Channel::Enter => 0,
            Channel::Exit => 1,
            Channel::EdgeFwd(x) => 2 + 2 * (x as u64 - 1),
            Channel::EdgeBwd(x) => 3 + 2 * (x as u64 - 1),
        }
    }
}

/// One Poisson clock realized as a deterministic event stream.
///
/// Events carry strictly increasing times and an auxiliary uniform used by
/// acceptance-style boundary mechanisms. Identical `(master_seed, scope,
/// channel)` reproduce the identical sequence.
#[derive(Debug, Clone)]
pub struct ClockStream {
    rng: CounterRng,
    rate: f64,
    t: f64,
}

impl ClockStream {
    pub fn new(master_seed: u64, scope: u64, channel: Channel, rate: f64) -> Self {
        ClockStream {
            rng: CounterRng::new(master_seed, scope, channel.code()),
            rate,
            t: 0.0,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Next event as `(time, u)` with `u` uniform in (0, 1).
    #[inline]
    pub fn next_event(&mut self) -> (f64, f64) {
        self.t += self.rng.next_exp(self.rate);
        let u = self.rng.next_f64();
        (self.t, u)
    }

    /// Discard events at or before `t0`, returning the first strictly later
    /// event. Used when a channel joins an already-running simulation (the
    /// conceptual clock existed from time zero).
    pub fn next_event_after(&mut self, t0: f64) -> (f64, f64) {
        loop {
            let ev = self.next_event();
            if ev.0 > t0 {
                return ev;
            }
        }
    }
}
