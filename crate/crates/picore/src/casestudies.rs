//! Generators for the two bundled case studies, produced as textual
//! specifications at a configurable finite scale and run through the regular
//! front end (so the generated sources parse, pretty-print, and round-trip
//! like any hand-written file).
//!
//! * A multicore interrupt-driven stepper controller: a control unit moves a
//!   car forward/backward while a radar unit inserts obstacles and an
//!   interrupt controller arbitrates via an IRQ stack.
//! * An ARINC-653 style multicore kernel fragment: per-core partition
//!   scheduling plus inter-partition queuing-port communication.

use crate::error::{Error, Result};
use crate::parser::parse_spec;
use crate::syntax::SpecFile;
use std::fmt::Write;

// ---------------------------------------------------------------------------
// Stepper controller
// ---------------------------------------------------------------------------

/// Finite scale for the stepper-controller study.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepperScale {
    /// Smallest admissible car position (must be ≤ 0).
    pub min_pos: i64,
    /// Largest admissible car position (must be ≥ 0).
    pub max_pos: i64,
    /// Distances range over `0..=max_v`.
    pub max_v: i64,
    /// Positions an obstacle may be inserted at.
    pub obstacle_params: Vec<i64>,
    /// At most this many obstacles can ever be inserted.
    pub max_obstacles: usize,
}

impl Default for StepperScale {
    fn default() -> StepperScale {
        StepperScale {
            min_pos: -4,
            max_pos: 4,
            max_v: 2,
            obstacle_params: vec![2, -2],
            max_obstacles: 2,
        }
    }
}

impl StepperScale {
    pub fn validate(&self) -> Result<()> {
        if self.min_pos > 0 || self.max_pos < 0 {
            return Err(Error::InvalidScale(
                "position range must contain 0".to_string(),
            ));
        }
        if self.max_v < 0 {
            return Err(Error::InvalidScale("max distance must be ≥ 0".to_string()));
        }
        if self.obstacle_params.is_empty() {
            return Err(Error::InvalidScale(
                "at least one obstacle position is required".to_string(),
            ));
        }
        for &p in &self.obstacle_params {
            if p < self.min_pos || p > self.max_pos {
                return Err(Error::InvalidScale(format!(
                    "obstacle position {} is outside the position range",
                    p
                )));
            }
        }
        Ok(())
    }
}

/// All sequences over `params` of length at most `max_len` (the possible
/// obstacle lists), shortest first.
fn obstacle_lists(params: &[i64], max_len: usize) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    let mut frontier: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &p in params {
                let mut t = vec![p];
                t.extend(s.iter().copied());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn int_set(lo: i64, hi: i64) -> String {
    (lo..=hi)
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn list_set(lists: &[Vec<i64>]) -> String {
    lists
        .iter()
        .map(|l| {
            format!(
                "[{}]",
                l.iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// The body, rely, guarantee, post, and midpoints of a movement event
/// (`forward` with `sign = "+"`, `backward` with `sign = "-"`).
struct Movement {
    body: String,
    rely: String,
    guar: String,
    post: String,
    mids: [String; 4],
}

fn movement(sign: &str) -> Movement {
    let step = format!("car_pos {} 1", sign); // the position one move away
    Movement {
        body: format!(
            "      AWAIT hd(stack) = C THEN i := 0 END ;;\n\
             \x20     AWAIT hd(stack) = C THEN pos_aux := car_pos END ;;\n\
             \x20     WHILE i != v /\\ ~ mem({step}, obstacle_pos) DO\n\
             \x20       AWAIT hd(stack) = C THEN\n\
             \x20         IF ~ mem({step}, obstacle_pos) THEN car_pos := {step} FI\n\
             \x20       END ;;\n\
             \x20       AWAIT hd(stack) = C THEN i := i + 1 END\n\
             \x20     OD ;;\n\
             \x20     AWAIT hd(stack) = C THEN stack := tl(stack) END",
            step = step
        ),
        rely: format!(
            "Id \\/ (car_pos' = car_pos /\\ i' = i /\\ pos_aux' = pos_aux\n\
             \x20   /\\ (~(hd(stack) = C) ==> ((obstacle_pos' = obstacle_pos /\\ (stack' = tl(stack) \\/ stack' = C # stack \\/ obst_pos_aux' = obstacle_pos))\n\
             \x20        \\/ (subset(obstacle_pos, obstacle_pos') /\\ mem(car_pos' {sign} 1, obstacle_pos') = mem(car_pos' {sign} 1, obstacle_pos))))\n\
             \x20   /\\ (hd(stack) = C ==> (obstacle_pos' = obstacle_pos /\\ stack' = R # stack /\\ obst_pos_aux' = obst_pos_aux)))",
            sign = sign
        ),
        guar: format!(
            "Id \\/ ((((i' = 0 \\/ i' = i + 1 \\/ stack' = tl(stack)) /\\ car_pos' = car_pos)\n\
             \x20     \\/ (~ mem({step}, obstacle_pos) /\\ car_pos' = {step}))\n\
             \x20   /\\ hd(stack) = C /\\ obstacle_pos' = obstacle_pos /\\ obst_pos_aux' = obst_pos_aux)",
            step = step
        ),
        post: format!(
            "car_pos = pos_aux {sign} i /\\ (i = v \\/ mem(pos_aux {sign} i {sign} 1, obstacle_pos))",
            sign = sign
        ),
        mids: [
            "i = 0".to_string(),
            format!("car_pos = pos_aux {} i", sign),
            format!(
                "car_pos = pos_aux {sign} i /\\ (i = v \\/ mem(car_pos {sign} 1, obstacle_pos))",
                sign = sign
            ),
            format!("car_pos = pos_aux {sign} i {sign} 1", sign = sign),
        ],
    }
}

/// The stepper study as a textual specification.
pub fn stepper_source(sc: &StepperScale) -> Result<String> {
    sc.validate()?;
    let positions = int_set(sc.min_pos, sc.max_pos);
    let distances = int_set(0, sc.max_v);
    let lists = list_set(&obstacle_lists(&sc.obstacle_params, sc.max_obstacles));
    let obstacle_at = sc
        .obstacle_params
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    let fwd = movement("+");
    let bwd = movement("-");
    let max_obs = sc.max_obstacles;

    let mut out = String::new();
    let _ = write!(
        out,
        "DOMAINS\n\
         \x20 UNITS : {{C, R, PIC}};;\n\
         \x20 car_pos : {{{positions}}};;\n\
         \x20 pos_aux : {{{positions}}};;\n\
         \x20 i : {{{distances}}};;\n\
         \x20 obstacle_pos : {{{lists}}};;\n\
         \x20 obst_pos_aux : {{{lists}}};;\n\
         \x20 stack : {{[NONE], [C, NONE], [R, NONE], [C, R, NONE], [R, C, NONE]}}\n\
         END\n\n\
         INIT\n\
         \x20 car_pos = 0 /\\ pos_aux = 0 /\\ i = 0 /\\ obstacle_pos = [] /\\ obst_pos_aux = [] /\\ stack = [NONE]\n\
         END\n\n"
    );
    let _ = write!(
        out,
        "SYSTEM\n\
         UNIT C :\n\
         \x20 {{ EVENT forward [v : {{{distances}}}] @ C THEN\n{fwd_body}\n\x20   END,\n\
         \x20   EVENT backward [v : {{{distances}}}] @ C THEN\n{bwd_body}\n\x20   END }}\n\
         UNIT R :\n\
         \x20 {{ EVENT obstacle [v : {{{obstacle_at}}}] @ R WHEN len(obstacle_pos) < {max_obs} THEN\n\
         \x20     AWAIT hd(stack) = R THEN obst_pos_aux := obstacle_pos END ;;\n\
         \x20     AWAIT hd(stack) = R THEN\n\
         \x20       IF v != car_pos /\\ v != car_pos + 1 /\\ v != car_pos - 1 THEN\n\
         \x20         obstacle_pos := v # obstacle_pos\n\
         \x20       FI\n\
         \x20     END ;;\n\
         \x20     AWAIT hd(stack) = R THEN stack := tl(stack) END\n\
         \x20   END }}\n\
         UNIT PIC :\n\
         \x20 {{ EVENT IRQs [dev : {{C, R}}] @ PIC THEN\n\
         \x20     ATOM IF ~ mem(dev, stack) THEN stack := dev # stack FI END\n\
         \x20   END }}\n\
         END\n\n",
        fwd_body = fwd.body,
        bwd_body = bwd.body,
    );
    let _ = write!(
        out,
        "RGSPECS\n\
         RG forward [v] @ C :\n\
         PRE true\n\
         RELY {fr}\n\
         GUAR {fg}\n\
         POST {fp}\n\
         MID {fm0}\n\
         MID {fm1}\n\
         MID {fm2}\n\
         MID {fm3}\n\
         ;;\n\
         RG backward [v] @ C :\n\
         PRE true\n\
         RELY {br}\n\
         GUAR {bg}\n\
         POST {bp}\n\
         MID {bm0}\n\
         MID {bm1}\n\
         MID {bm2}\n\
         MID {bm3}\n\
         ;;\n\
         RG obstacle [v] @ R :\n\
         PRE true\n\
         RELY Id \\/ (obstacle_pos' = obstacle_pos /\\ obst_pos_aux' = obst_pos_aux)\n\
         GUAR Id \\/ (hd(stack) = R /\\ car_pos' = car_pos /\\ i' = i /\\ pos_aux' = pos_aux\n\
         \x20   /\\ ( (obstacle_pos' = obstacle_pos /\\ obst_pos_aux' = obstacle_pos /\\ stack' = stack)\n\
         \x20      \\/ (subset(obstacle_pos, obstacle_pos')\n\
         \x20          /\\ mem(car_pos + 1, obstacle_pos') = mem(car_pos + 1, obstacle_pos)\n\
         \x20          /\\ mem(car_pos, obstacle_pos') = mem(car_pos, obstacle_pos)\n\
         \x20          /\\ mem(car_pos - 1, obstacle_pos') = mem(car_pos - 1, obstacle_pos)\n\
         \x20          /\\ obst_pos_aux' = obst_pos_aux /\\ stack' = stack)\n\
         \x20      \\/ (obstacle_pos' = obstacle_pos /\\ obst_pos_aux' = obst_pos_aux /\\ stack' = tl(stack))))\n\
         POST true\n\
         MID true\n\
         MID true\n\
         ;;\n\
         RG IRQs [dev] @ PIC :\n\
         PRE true\n\
         RELY true\n\
         GUAR Id \\/ (car_pos' = car_pos /\\ i' = i /\\ pos_aux' = pos_aux /\\ obstacle_pos' = obstacle_pos\n\
         \x20   /\\ obst_pos_aux' = obst_pos_aux /\\ stack' = dev # stack /\\ ~ mem(dev, stack))\n\
         POST true\n\
         END\n\n\
         INVARIANTS\n\
         \x20 no_collision : ~ mem(car_pos, obstacle_pos)\n\
         END\n",
        fr = fwd.rely,
        fg = fwd.guar,
        fp = fwd.post,
        fm0 = fwd.mids[0],
        fm1 = fwd.mids[1],
        fm2 = fwd.mids[2],
        fm3 = fwd.mids[3],
        br = bwd.rely,
        bg = bwd.guar,
        bp = bwd.post,
        bm0 = bwd.mids[0],
        bm1 = bwd.mids[1],
        bm2 = bwd.mids[2],
        bm3 = bwd.mids[3],
    );
    Ok(out)
}

/// Builds the stepper study at scale `sc`.
pub fn build_stepper(sc: &StepperScale) -> Result<SpecFile> {
    parse_spec(&stepper_source(sc)?)
}

// ---------------------------------------------------------------------------
// ARINC-653 kernel fragment
// ---------------------------------------------------------------------------

/// Finite scale plus static deployment configuration for the ARINC study.
/// Cores and schedulers are in bijection; partitions are deployed on
/// schedulers; queuing ports belong to partitions; each channel connects a
/// source port to a destination port with a capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArincScale {
    pub cores: usize,
    pub partitions: usize,
    pub ports: usize,
    pub channels: usize,
    /// Number of distinct message symbols.
    pub messages: usize,
    /// Core → scheduler (must be a bijection).
    pub c2s: Vec<usize>,
    /// Partition → scheduler.
    pub p2s: Vec<usize>,
    /// Port → owning partition.
    pub p2p: Vec<usize>,
    /// Channel → source port.
    pub chsrc: Vec<usize>,
    /// Channel → destination port.
    pub chdest: Vec<usize>,
    /// Channel → capacity.
    pub chmax: Vec<usize>,
}

impl Default for ArincScale {
    fn default() -> ArincScale {
        ArincScale {
            cores: 2,
            partitions: 2,
            ports: 2,
            channels: 1,
            messages: 1,
            c2s: vec![0, 1],
            p2s: vec![0, 1],
            p2p: vec![0, 1],
            chsrc: vec![0],
            chdest: vec![1],
            chmax: vec![1],
        }
    }
}

impl ArincScale {
    pub fn validate(&self) -> Result<()> {
        if self.cores == 0 || self.partitions == 0 || self.messages == 0 {
            return Err(Error::InvalidScale(
                "cores, partitions, and messages must all be ≥ 1".to_string(),
            ));
        }
        if self.c2s.len() != self.cores {
            return Err(Error::InconsistentConfig(
                "c2s must assign a scheduler to every core".to_string(),
            ));
        }
        let mut seen = vec![false; self.cores];
        for &s in &self.c2s {
            if s >= self.cores || seen[s] {
                return Err(Error::InconsistentConfig(
                    "c2s must be a bijection between cores and schedulers".to_string(),
                ));
            }
            seen[s] = true;
        }
        if self.p2s.len() != self.partitions || self.p2s.iter().any(|&s| s >= self.cores) {
            return Err(Error::InconsistentConfig(
                "p2s must place every partition on an existing scheduler".to_string(),
            ));
        }
        if self.p2p.len() != self.ports || self.p2p.iter().any(|&p| p >= self.partitions) {
            return Err(Error::InconsistentConfig(
                "p2p must give every port to an existing partition".to_string(),
            ));
        }
        if self.chsrc.len() != self.channels
            || self.chdest.len() != self.channels
            || self.chmax.len() != self.channels
        {
            return Err(Error::InconsistentConfig(
                "chsrc, chdest, and chmax must describe every channel".to_string(),
            ));
        }
        for c in 0..self.channels {
            if self.chsrc[c] >= self.ports || self.chdest[c] >= self.ports {
                return Err(Error::InconsistentConfig(format!(
                    "channel {} connects a port that does not exist",
                    c
                )));
            }
            if self.chsrc[c] == self.chdest[c] {
                return Err(Error::InconsistentConfig(format!(
                    "channel {} has the same source and destination port",
                    c
                )));
            }
            if self.chmax[c] == 0 {
                return Err(Error::InvalidScale(format!(
                    "channel {} must have capacity ≥ 1",
                    c
                )));
            }
        }
        for s in 0..self.cores {
            if !self.p2s.contains(&s) {
                return Err(Error::InconsistentConfig(format!(
                    "scheduler {} has no partition deployed on it",
                    s
                )));
            }
        }
        Ok(())
    }

    fn parts_on(&self, sched: usize) -> Vec<usize> {
        (0..self.partitions).filter(|&p| self.p2s[p] == sched).collect()
    }

    /// Channels whose source (or destination, per `dest`) port belongs to a
    /// partition deployed on `sched`, paired with that partition.
    fn chans_on(&self, sched: usize, dest: bool) -> Vec<(usize, usize)> {
        (0..self.channels)
            .filter_map(|c| {
                let port = if dest { self.chdest[c] } else { self.chsrc[c] };
                let part = self.p2p[port];
                (self.p2s[part] == sched).then_some((c, part))
            })
            .collect()
    }
}

fn conj(parts: Vec<String>) -> String {
    if parts.is_empty() {
        "true".to_string()
    } else {
        parts.join(" /\\ ")
    }
}

fn disj(parts: Vec<String>) -> String {
    if parts.is_empty() {
        "false".to_string()
    } else if parts.len() == 1 {
        parts.into_iter().next().expect("length checked")
    } else {
        format!("({})", parts.join(" \\/ "))
    }
}

/// Message lists of length at most `max` over `messages` symbols.
fn message_lists(messages: usize, max: usize) -> String {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &frontier {
            for m in 0..messages {
                let mut t = vec![m];
                t.extend(s.iter().copied());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.iter()
        .map(|l| {
            format!(
                "[{}]",
                l.iter()
                    .map(|m| format!("M{}", m))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Pins (`x' = x`) for everything outside the given scheduler's own state:
/// every queue, every other scheduler's current partition, every partition
/// not deployed on it.
fn pins_outside(sc: &ArincScale, sched: usize) -> Vec<String> {
    let mut pins = Vec::new();
    for s in 0..sc.cores {
        if s != sched {
            pins.push(format!("cur{s}' = cur{s}", s = s));
        }
    }
    for p in 0..sc.partitions {
        if sc.p2s[p] != sched {
            pins.push(format!("partst{p}' = partst{p}", p = p));
        }
    }
    for c in 0..sc.channels {
        pins.push(format!("qbuf{c}' = qbuf{c}", c = c));
        pins.push(format!("qbufsize{c}' = qbufsize{c}", c = c));
    }
    pins
}

/// The ARINC study as a textual specification. With `mutate_schedule` the
/// dispatch step of every Schedule event omits setting the newly scheduled
/// partition to RUN — the seeded fault that breaks inv2.
pub fn arinc_source(sc: &ArincScale, mutate_schedule: bool) -> Result<String> {
    sc.validate()?;
    let mut out = String::new();

    // ---- DOMAINS / INIT ----
    let part_syms: Vec<String> = (0..sc.partitions).map(|p| format!("P{}", p)).collect();
    let _ = writeln!(out, "DOMAINS");
    let _ = writeln!(
        out,
        "  UNITS : {{{}}};;",
        (0..sc.cores)
            .map(|k| format!("K{}", k))
            .collect::<Vec<_>>()
            .join(", ")
    );
    for s in 0..sc.cores {
        let _ = writeln!(out, "  cur{} : {{NOP, {}}};;", s, part_syms.join(", "));
    }
    for p in 0..sc.partitions {
        let _ = writeln!(out, "  partst{} : {{IDLE, READY, RUN}};;", p);
    }
    for c in 0..sc.channels {
        let _ = writeln!(
            out,
            "  qbuf{} : {{{}}};;",
            c,
            message_lists(sc.messages, sc.chmax[c])
        );
        let _ = writeln!(out, "  qbufsize{} : {{{}}};;", c, int_set(0, sc.chmax[c] as i64));
    }
    let _ = writeln!(out, "END\n");

    let mut init = Vec::new();
    for s in 0..sc.cores {
        init.push(format!("cur{} = NOP", s));
    }
    for p in 0..sc.partitions {
        init.push(format!("partst{} = IDLE", p));
    }
    for c in 0..sc.channels {
        init.push(format!("qbuf{} = []", c));
        init.push(format!("qbufsize{} = 0", c));
    }
    let _ = writeln!(out, "INIT\n  {}\nEND\n", conj(init));

    // ---- SYSTEM ----
    let _ = writeln!(out, "SYSTEM");
    for k in 0..sc.cores {
        let s = sc.c2s[k];
        let parts = sc.parts_on(s);
        let _ = writeln!(out, "UNIT K{} :", k);
        // Core_Init: one simultaneous assignment.
        let mut asgns = vec![format!("cur{} := NOP", s)];
        for &p in &parts {
            asgns.push(format!("partst{} := READY", p));
        }
        let _ = writeln!(
            out,
            "  EVENT Core_Init @ K{} THEN\n    {}\n  END ;",
            k,
            asgns.join(", ")
        );
        let mut events = Vec::new();
        for &p in &parts {
            let mut dispatch = Vec::new();
            for &q in &parts {
                dispatch.push(format!(
                    "IF cur{s} = P{q} THEN partst{q} := READY FI",
                    s = s,
                    q = q
                ));
            }
            dispatch.push(format!("cur{} := NOP", s));
            let run = if mutate_schedule {
                format!("cur{s} := P{p}", s = s, p = p)
            } else {
                format!("cur{s} := P{p}, partst{p} := RUN", s = s, p = p)
            };
            events.push(format!(
                "EVENT Schedule [P{p}] @ K{k} WHEN partst{p} != IDLE THEN\n\
                 \x20     IF cur{s} != NOP THEN\n\
                 \x20       ATOM {dispatch} END\n\
                 \x20     FI ;;\n\
                 \x20     {run}\n\
                 \x20   END",
                p = p,
                k = k,
                s = s,
                dispatch = dispatch.join(" ;; "),
                run = run
            ));
        }
        for (c, part) in sc.chans_on(s, false) {
            let msgs = (0..sc.messages)
                .map(|m| format!("M{}", m))
                .collect::<Vec<_>>()
                .join(", ");
            events.push(format!(
                "EVENT Send_QMsg [PT{pt}, msg : {{{msgs}}}] @ K{k} WHEN cur{s} = P{part} THEN\n\
                 \x20     AWAIT qbufsize{c} < {cap} THEN\n\
                 \x20       qbuf{c} := append(qbuf{c}, [msg]), qbufsize{c} := qbufsize{c} + 1\n\
                 \x20     END\n\
                 \x20   END",
                pt = sc.chsrc[c],
                msgs = msgs,
                k = k,
                s = s,
                part = part,
                c = c,
                cap = sc.chmax[c]
            ));
        }
        for (c, part) in sc.chans_on(s, true) {
            events.push(format!(
                "EVENT Recv_QMsg [PT{pt}] @ K{k} WHEN cur{s} = P{part} THEN\n\
                 \x20     AWAIT qbufsize{c} > 0 THEN\n\
                 \x20       qbuf{c} := tl(qbuf{c}), qbufsize{c} := qbufsize{c} - 1\n\
                 \x20     END\n\
                 \x20   END",
                pt = sc.chdest[c],
                k = k,
                s = s,
                part = part,
                c = c
            ));
        }
        let _ = writeln!(out, "  {{ {} }}", events.join(",\n    "));
    }
    let _ = writeln!(out, "END\n");

    // ---- RGSPECS ----
    let _ = writeln!(out, "RGSPECS");
    for k in 0..sc.cores {
        let s = sc.c2s[k];
        let parts = sc.parts_on(s);
        // The core's rely: no other core touches its scheduler state.
        let mut own_pins = vec![format!("cur{s}' = cur{s}", s = s)];
        for &p in &parts {
            own_pins.push(format!("partst{p}' = partst{p}", p = p));
        }
        let rely = format!("Id \\/ ({})", conj(own_pins));
        let outside = conj(pins_outside(sc, s));

        // Core_Init guarantee.
        let mut ci = vec![outside.clone(), format!("cur{}' = NOP", s)];
        for &p in &parts {
            ci.push(format!("partst{}' = READY", p));
        }
        let _ = writeln!(
            out,
            "RG Core_Init @ K{k} :\nPRE true\nRELY {rely}\nGUAR Id \\/ ({g})\nPOST true\n;;",
            k = k,
            rely = rely,
            g = conj(ci)
        );

        // Schedule guarantee: either a dispatch step (the running partition is
        // set back to READY and the scheduler cleared) or a run step (the
        // chosen partition becomes current and RUN).
        if !parts.is_empty() {
            let mut dispatch = vec![
                format!("cur{s} != NOP", s = s),
                format!("cur{s}' = NOP", s = s),
            ];
            for &q in &parts {
                dispatch.push(format!(
                    "(cur{s} = P{q} ==> partst{q}' = READY)",
                    s = s,
                    q = q
                ));
                dispatch.push(format!(
                    "(cur{s} != P{q} ==> partst{q}' = partst{q})",
                    s = s,
                    q = q
                ));
            }
            let mut runs = Vec::new();
            for &q in &parts {
                let mut one = vec![
                    format!("p = P{}", q),
                    format!("cur{s}' = P{q}", s = s, q = q),
                    format!("partst{}' = RUN", q),
                ];
                for &r in &parts {
                    if r != q {
                        one.push(format!("partst{r}' = partst{r}", r = r));
                    }
                }
                runs.push(format!("({})", conj(one)));
            }
            let g = format!(
                "{outside} /\\ (({dispatch}) \\/ (cur{s} = NOP /\\ {runs}))",
                outside = outside,
                dispatch = conj(dispatch),
                s = s,
                runs = disj(runs)
            );
            let _ = writeln!(
                out,
                "RG Schedule [p] @ K{k} :\nPRE true\nRELY {rely}\nGUAR Id \\/ ({g})\nPOST true\nMID cur{s} = NOP\n;;",
                k = k,
                rely = rely,
                g = g,
                s = s
            );
        }

        // Queue guarantees: size tracks length on the touched channel, all
        // other channels pinned, scheduler state pinned everywhere.
        let mut sched_pins = Vec::new();
        for s2 in 0..sc.cores {
            sched_pins.push(format!("cur{s}' = cur{s}", s = s2));
        }
        for p in 0..sc.partitions {
            sched_pins.push(format!("partst{p}' = partst{p}", p = p));
        }
        for (dest, formals) in [(false, "[pt, msg]"), (true, "[pt]")] {
            let chans = sc.chans_on(s, dest);
            if chans.is_empty() {
                continue;
            }
            let mut per_chan = Vec::new();
            for (c, _) in &chans {
                let port = if dest { sc.chdest[*c] } else { sc.chsrc[*c] };
                let mut one = vec![
                    format!("pt = PT{}", port),
                    format!(
                        "(qbufsize{c} = len(qbuf{c}) ==> qbufsize{c}' = len(qbuf{c}'))",
                        c = c
                    ),
                ];
                for c2 in 0..sc.channels {
                    if c2 != *c {
                        one.push(format!("qbuf{c}' = qbuf{c}", c = c2));
                        one.push(format!("qbufsize{c}' = qbufsize{c}", c = c2));
                    }
                }
                per_chan.push(format!("({})", conj(one)));
            }
            let name = if dest { "Recv_QMsg" } else { "Send_QMsg" };
            let g = format!("{} /\\ {}", conj(sched_pins.clone()), disj(per_chan));
            let _ = writeln!(
                out,
                "RG {name} {formals} @ K{k} :\nPRE true\nRELY {rely}\nGUAR Id \\/ ({g})\nPOST true\n;;",
                name = name,
                formals = formals,
                k = k,
                rely = rely,
                g = g
            );
        }
    }
    let _ = writeln!(out, "END\n");

    // ---- INVARIANTS ----
    let mut inv1 = Vec::new();
    for s in 0..sc.cores {
        let mut allowed = vec![format!("cur{} = NOP", s)];
        for p in sc.parts_on(s) {
            allowed.push(format!("cur{s} = P{p}", s = s, p = p));
        }
        inv1.push(format!("({})", allowed.join(" \\/ ")));
    }
    let mut inv2 = Vec::new();
    for s in 0..sc.cores {
        for p in sc.parts_on(s) {
            inv2.push(format!("(cur{s} = P{p} ==> partst{p} = RUN)", s = s, p = p));
        }
    }
    let mut inv3 = Vec::new();
    for c in 0..sc.channels {
        inv3.push(format!("qbufsize{c} = len(qbuf{c})", c = c));
    }
    let _ = writeln!(out, "INVARIANTS");
    let _ = writeln!(out, "  inv1 : {};;", conj(inv1.clone()));
    let _ = writeln!(out, "  inv2 : {};;", conj(inv2.clone()));
    let _ = writeln!(out, "  inv3 : {};;", conj(inv3.clone()));
    let _ = writeln!(
        out,
        "  inv_all : {}",
        conj(vec![conj(inv1), conj(inv2), conj(inv3)])
    );
    let _ = writeln!(out, "END");
    Ok(out)
}

/// Builds the ARINC study at scale `sc`.
pub fn build_arinc(sc: &ArincScale) -> Result<SpecFile> {
    parse_spec(&arinc_source(sc, false)?)
}

/// The ARINC study with the seeded Schedule fault (the dispatched partition
/// is never marked RUN), used as a mutation oracle: inv2 gains a reachable
/// counterexample.
pub fn build_arinc_mutated(sc: &ArincScale) -> Result<SpecFile> {
    parse_spec(&arinc_source(sc, true)?)
}
