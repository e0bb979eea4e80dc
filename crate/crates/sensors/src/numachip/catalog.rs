//! NumaConnect2 event catalog.
//!
//! Descriptions are the vendor's event names, kept byte-for-byte (including
//! the doubled "from from" in the wait-cycle entries). There is no
//! "valid cycles acked for requests from PIU to LMPE" entry.

use ccscope_core::EventKind;

use EventKind::{ContextLevel as Ctx, Counter as Cnt, OccupancyCycles as Occ};

pub struct CatalogEntry {
    pub mnemonic: &'static str,
    pub description: &'static str,
    pub kind: EventKind,
    /// Backed by 8 counters: {cache-tag, main-memory-tag} x 4 stripes.
    pub striped: bool,
}

const fn e(mnemonic: &'static str, description: &'static str, kind: EventKind) -> CatalogEntry {
    CatalogEntry {
        mnemonic,
        description,
        kind,
        striped: false,
    }
}

const fn s(mnemonic: &'static str, description: &'static str) -> CatalogEntry {
    CatalogEntry {
        mnemonic,
        description,
        kind: Cnt,
        striped: true,
    }
}

pub const LOGICAL_EVENTS: usize = 71;
pub const SCALAR_COUNTERS: usize = 64;
pub const STRIPED_EVENTS: usize = 7;
pub const TAG_UNITS: usize = 2;
pub const STRIPES: usize = 4;
pub const STRIPE_SET: usize = TAG_UNITS * STRIPES;
pub const COUNTERS_PER_INTERCONNECT: usize = SCALAR_COUNTERS + STRIPED_EVENTS * STRIPE_SET;

/// Index of the `cycles` entry, which mirrors the cycle counter.
pub const CYCLES: usize = 0;

pub static CATALOG: [CatalogEntry; LOGICAL_EVENTS] = [
    e("n2Cycles", "cycles", Occ),
    e(
        "n2RmpeHalfCtxInUse",
        "cycles at least half of the available RMPE contexts were in use",
        Ctx,
    ),
    e(
        "n2RmpeFreeCtxSiu",
        "cycles the RMPE had free contexts for SIU accesses",
        Ctx,
    ),
    e(
        "n2RmpeFreeCtxPiu",
        "cycles the RMPE had free contexts for PIU accesses",
        Ctx,
    ),
    e("n2PiuRmpeReq", "requests from PIU to RMPE", Cnt),
    e(
        "n2PiuRmpeReqAcked",
        "valid cycles acked for requests from PIU to RMPE",
        Occ,
    ),
    e(
        "n2PiuRmpeReqWait",
        "wait cycles for requests from from PIU to RMPE",
        Occ,
    ),
    e("n2PiuRmpeRsp", "responses from PIU to RMPE", Cnt),
    e(
        "n2PiuRmpeRspAcked",
        "valid cycles acked for responses from PIU to RMPE",
        Occ,
    ),
    e(
        "n2PiuRmpeRspWait",
        "wait cycles for responses from from PIU to RMPE",
        Occ,
    ),
    e("n2SiuRmpeReq", "requests from SIU to RMPE", Cnt),
    e(
        "n2SiuRmpeReqAcked",
        "valid cycles acked for requests from SIU to RMPE",
        Occ,
    ),
    e(
        "n2SiuRmpeReqWait",
        "wait cycles for requests from from SIU to RMPE",
        Occ,
    ),
    e("n2SiuRmpeRsp", "responses from SIU to RMPE", Cnt),
    e(
        "n2SiuRmpeRspAcked",
        "valid cycles acked for responses from SIU to RMPE",
        Occ,
    ),
    e(
        "n2SiuRmpeRspWait",
        "wait cycles for responses from from SIU to RMPE",
        Occ,
    ),
    e(
        "n2LmpeHalfCtxInUse",
        "cycles at least half of the available LMPE contexts were in use",
        Ctx,
    ),
    e(
        "n2LmpeFreeCtxSiu",
        "cycles the LMPE had free contexts for SIU accesses",
        Ctx,
    ),
    e(
        "n2LmpeFreeCtxPiu",
        "cycles the LMPE had free contexts for PIU accesses",
        Ctx,
    ),
    e("n2PiuLmpeReq", "requests from PIU to LMPE", Cnt),
    e(
        "n2PiuLmpeReqWait",
        "wait cycles for requests from from PIU to LMPE",
        Occ,
    ),
    e("n2PiuLmpeRsp", "responses from PIU to LMPE", Cnt),
    e(
        "n2PiuLmpeRspAcked",
        "valid cycles acked for responses from PIU to LMPE",
        Occ,
    ),
    e(
        "n2PiuLmpeRspWait",
        "wait cycles for responses from from PIU to LMPE",
        Occ,
    ),
    e("n2SiuLmpeReq", "requests from SIU to LMPE", Cnt),
    e(
        "n2SiuLmpeReqAcked",
        "valid cycles acked for requests from SIU to LMPE",
        Occ,
    ),
    e(
        "n2SiuLmpeReqWait",
        "wait cycles for requests from from SIU to LMPE",
        Occ,
    ),
    e("n2SiuLmpeRsp", "responses from SIU to LMPE", Cnt),
    e(
        "n2SiuLmpeRspAcked",
        "valid cycles acked for responses from SIU to LMPE",
        Occ,
    ),
    e(
        "n2SiuLmpeRspWait",
        "wait cycles for responses from from SIU to LMPE",
        Occ,
    ),
    e("n2VicBlkRecv", "VicBlk and VicBlkClean commands received", Cnt),
    e("n2RdBlkRecv", "RdBlk and RdBlkS commands received", Cnt),
    e("n2RdBlkModRecv", "RdBlkMod commands received", Cnt),
    e("n2ChangeToDirtyRecv", "ChangeToDirty commands received", Cnt),
    e("n2RdSizedRecv", "RdSized commands received", Cnt),
    e("n2WrSizedRecv", "WrSized commands received", Cnt),
    e("n2DirPrbRecv", "directed Probe commands received", Cnt),
    e("n2BcastPrbRecv", "broadcast Probe commands received", Cnt),
    e("n2BcastRecv", "Broadcast commands received", Cnt),
    e("n2RdRespRecv", "RdResponse commands received", Cnt),
    e("n2PrbRespRecv", "ProbeResponse commands received", Cnt),
    e(
        "n2CachelinesRecv",
        "data packets with full cachelines of data received",
        Cnt,
    ),
    e(
        "n2PartialRecv",
        "data packets with less than a full cache line received",
        Cnt,
    ),
    e("n2VicBlkSent", "VicBlk and VicBlkClean commands sent", Cnt),
    e("n2RdBlkSent", "RdBlk and RdBlkS commands sent", Cnt),
    e("n2RdBlkModSent", "RdBlkMod commands sent", Cnt),
    e("n2ChangeToDirtySent", "ChangeToDirty commands sent", Cnt),
    e("n2RdSizedSent", "RdSized commands sent", Cnt),
    e("n2WrSizedSent", "WrSized commands sent", Cnt),
    e("n2BcastPrbSent", "broadcast Probe commands sent", Cnt),
    e("n2BcastSent", "broadcast commands sent", Cnt),
    e("n2RdRespSent", "RdResponse commands sent", Cnt),
    e("n2PrbRespSent", "ProbeResponse commands sent", Cnt),
    e(
        "n2CachelinesSent",
        "data packets with full cachelines of data sent",
        Cnt,
    ),
    e(
        "n2PartialSent",
        "data packets with less than a full cache line sent",
        Cnt,
    ),
    e("n2CacheReadHitRmpe", "nCache read hits on RMPE", Cnt),
    e("n2CacheStoreHitRmpe", "nCache store hits on RMPE", Cnt),
    e("n2CacheStoreMissRmpe", "nCache store misses on RMPE", Cnt),
    e("n2CacheRolloutRmpe", "nCache roll outs on RMPE", Cnt),
    e("n2CacheInvalRmpe", "nCache invalidates on RMPE", Cnt),
    e(
        "n2PiuFreeHreq",
        "cycles with at least one free Hreq context in PIU",
        Ctx,
    ),
    e(
        "n2PiuFreePprb",
        "cycles with at least one free Pprb context in PIU",
        Ctx,
    ),
    e(
        "n2PiuFreeHprb",
        "cycles with at least one free Hprb context in PIU",
        Ctx,
    ),
    e(
        "n2PiuFreePreq",
        "cycles with at least one free Preq context in PIU",
        Ctx,
    ),
    s("n2TagAccess", "accesses to C/Mtag cache 0..3"),
    s("n2TagWriteHit", "write hit accesses to C/Mtag cache 0..3"),
    s("n2TagReadHit", "read hit accesses to C/Mtag cache 0..3"),
    s("n2TagWriteWb", "write accesses with writebacks to C/Mtag cache 0..3"),
    s("n2TagReadWb", "read accesses with writebacks to C/Mtag cache 0..3"),
    s("n2TagWriteMiss", "write miss accesses to C/Mtag cache 0..3"),
    s("n2TagReadMiss", "read miss accesses to C/Mtag cache 0..3"),
];

/// Register-file indices backing a logical event.
pub fn backing_counters(event: usize) -> std::ops::Range<usize> {
    if event < SCALAR_COUNTERS {
        event..event + 1
    } else {
        let k = event - SCALAR_COUNTERS;
        let start = SCALAR_COUNTERS + k * STRIPE_SET;
        start..start + STRIPE_SET
    }
}

pub fn find(mnemonic: &str) -> Option<usize> {
    CATALOG.iter().position(|e| e.mnemonic == mnemonic)
}
