//! Platform helpers: thread placement, CPU accounting, host identity.

use std::io;
use std::time::Duration;

const FIRST_NODE_CPULIST: &str = "/sys/devices/system/node/node0/cpulist";

/// Parses a kernel cpulist such as `0-3,8,10-11`.
pub fn parse_cpulist(list: &str) -> Option<Vec<usize>> {
    let mut cpus = Vec::new();
    for part in list.trim().split(',').filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().ok()?, b.parse().ok()?);
                if a > b {
                    return None;
                }
                cpus.extend(a..=b);
            }
            None => cpus.push(part.parse().ok()?),
        }
    }
    (!cpus.is_empty()).then_some(cpus)
}

/// CPUs of the first NUMA node, if the platform describes its topology.
pub fn first_node_cpus() -> Option<Vec<usize>> {
    parse_cpulist(&std::fs::read_to_string(FIRST_NODE_CPULIST).ok()?)
}

/// Restricts the calling thread to the first NUMA node's CPUs.
///
/// Returns `Ok(false)` when the platform exposes no topology or affinity
/// control; the caller keeps running unpinned.
#[cfg(target_os = "linux")]
pub fn pin_current_thread_to_first_node() -> io::Result<bool> {
    let Some(cpus) = first_node_cpus() else {
        return Ok(false);
    };
    // SAFETY: cpu_set_t is plain data; CPU_SET bounds are checked below.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        let max = 8 * std::mem::size_of::<libc::cpu_set_t>();
        for cpu in cpus.into_iter().filter(|&c| c < max) {
            libc::CPU_SET(cpu, &mut set);
        }
        if libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) != 0 {
            return Err(io::Error::last_os_error());
        }
    }
    Ok(true)
}

#[cfg(not(target_os = "linux"))]
pub fn pin_current_thread_to_first_node() -> io::Result<bool> {
    Ok(false)
}

/// CPU time consumed by the calling thread.
pub fn thread_cpu_time() -> Duration {
    clock(libc::CLOCK_THREAD_CPUTIME_ID)
}

/// CPU time consumed by the whole process.
pub fn process_cpu_time() -> Duration {
    clock(libc::CLOCK_PROCESS_CPUTIME_ID)
}

fn clock(id: libc::clockid_t) -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: ts is a valid out-pointer.
    if unsafe { libc::clock_gettime(id, &mut ts) } != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

pub fn hostname() -> String {
    let mut buf = [0u8; 256];
    // SAFETY: buf is writable for its full length.
    let rc = unsafe { libc::gethostname(buf.as_mut_ptr().cast(), buf.len()) };
    if rc == 0 {
        let end = buf.iter().position(|&b| b == 0).unwrap_or(buf.len());
        if let Ok(s) = std::str::from_utf8(&buf[..end]) {
            return s.to_owned();
        }
    }
    "unknown".to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpulists() {
        assert_eq!(parse_cpulist("0-3,8,10-11\n"), Some(vec![0, 1, 2, 3, 8, 10, 11]));
        assert_eq!(parse_cpulist("5"), Some(vec![5]));
        assert_eq!(parse_cpulist(""), None);
        assert_eq!(parse_cpulist("3-1"), None);
        assert_eq!(parse_cpulist("a"), None);
    }

    #[test]
    fn cpu_clock_advances() {
        let start = thread_cpu_time();
        let mut x = 0u64;
        for i in 0..5_000_000u64 {
            x = x.wrapping_mul(31).wrapping_add(i);
        }
        std::hint::black_box(x);
        assert!(thread_cpu_time() > start);
        assert!(process_cpu_time() >= thread_cpu_time());
    }

    #[test]
    fn pinning_never_fails_hard() {
        // Either pinned or reported as unavailable; both are fine here.
        let _ = pin_current_thread_to_first_node();
        assert!(!hostname().is_empty());
    }
}
