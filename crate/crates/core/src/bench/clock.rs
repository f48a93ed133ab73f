use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

/// Process CPU time and wall time, both in seconds from an arbitrary origin.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Reading {
    pub cpu: f64,
    pub wall: f64,
}

impl Reading {
    pub fn since(self, start: Reading) -> Reading {
        Reading {
            cpu: (self.cpu - start.cpu).max(0.0),
            wall: (self.wall - start.wall).max(0.0),
        }
    }
}

pub trait Clock: Sync {
    fn read(&self) -> Reading;
}

/// CPU time of the whole process (all threads) plus a monotonic wall clock.
pub struct ProcessClock {
    origin: Instant,
}

impl ProcessClock {
    pub fn new() -> Self {
        ProcessClock {
            origin: Instant::now(),
        }
    }
}

impl Default for ProcessClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for ProcessClock {
    fn read(&self) -> Reading {
        Reading {
            cpu: process_cpu_seconds(),
            wall: self.origin.elapsed().as_secs_f64(),
        }
    }
}

#[cfg(unix)]
pub fn process_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

#[cfg(not(unix))]
pub fn process_cpu_seconds() -> f64 {
    0.0
}

/// Test clock: each read advances both readings by `step` seconds and is
/// counted.
pub struct FakeClock {
    step: f64,
    reads: AtomicU64,
}

impl FakeClock {
    pub fn new(step: f64) -> Self {
        FakeClock {
            step,
            reads: AtomicU64::new(0),
        }
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::SeqCst)
    }
}

impl Clock for FakeClock {
    fn read(&self) -> Reading {
        let n = self.reads.fetch_add(1, Ordering::SeqCst);
        let t = n as f64 * self.step;
        Reading { cpu: t, wall: t }
    }
}

pub fn median(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut s = samples.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let mid = s.len() / 2;
    if s.len() % 2 == 1 {
        s[mid]
    } else {
        (s[mid - 1] + s[mid]) / 2.0
    }
}
