use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use regen_core::sim::{run_scenario, Scenario, SimSummary};
use regen_core::{
    capacity_bound, resilient_bound, Mode, NodeShare, PrimeField, RegeneratingCode, Response,
    SystemParams,
};

use crate::error::CliError;
use crate::shard::{shard_path, ShardFile, ShardHeader, ShardSet, MAX_MODULUS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeOptions {
    pub mode: Mode,
    pub n: usize,
    pub k: usize,
    /// Defaults to 2k − 2 for MSR; required for MBR.
    pub d: Option<usize>,
    pub beta: usize,
}

impl CodeOptions {
    pub fn params(&self) -> Result<SystemParams, CliError> {
        let p = match self.mode {
            Mode::Msr => SystemParams::msr(self.k, self.beta, self.n)?,
            Mode::Mbr => {
                let d = self
                    .d
                    .ok_or_else(|| CliError::BadArgs("--d is required for MBR".into()))?;
                SystemParams::mbr(self.k, d, self.beta, self.n)?
            }
        };
        match self.d {
            Some(d) if d != p.d => Err(CliError::BadArgs(format!(
                "MSR requires d = 2k-2 = {}, got {d}",
                p.d
            ))),
            _ => Ok(p),
        }
    }
}

/// The field used for shard files: the smallest prime ≥ max(4n, 257),
/// which must still fit a 16-bit symbol.
pub fn shard_field(n: usize) -> Result<PrimeField, CliError> {
    let field = PrimeField::for_nodes(n);
    if field.modulus() > MAX_MODULUS {
        return Err(CliError::BadArgs(format!(
            "n = {n} needs q = {} which does not fit 16-bit symbols",
            field.modulus()
        )));
    }
    Ok(field)
}

fn to_u16(v: usize, what: &str) -> Result<u16, CliError> {
    u16::try_from(v)
        .map_err(|_| CliError::BadArgs(format!("{what} = {v} does not fit the shard header")))
}

/// Splits `data` into B-byte blocks and encodes each one. Returns one shard
/// per node, in node order.
pub fn encode_bytes(data: &[u8], opts: &CodeOptions) -> Result<Vec<ShardFile>, CliError> {
    let params = opts.params()?;
    let field = shard_field(params.n)?;
    let code = regen_core::PmCode::new(&params, field)?;
    let b = params.b;
    let blocks = data.len().div_ceil(b);

    let encoded: Vec<Vec<NodeShare>> = (0..blocks)
        .into_par_iter()
        .map(|i| {
            let mut block: Vec<u32> = data[i * b..data.len().min((i + 1) * b)]
                .iter()
                .map(|&x| x as u32)
                .collect();
            block.resize(b, 0);
            code.encode(&block)
        })
        .collect::<Result<_, _>>()?;

    let header = ShardHeader {
        mode: params.mode,
        n: to_u16(params.n, "n")?,
        k: to_u16(params.k, "k")?,
        d: to_u16(params.d, "d")?,
        beta: to_u16(params.beta, "beta")?,
        q: field.modulus(),
        node_id: 0,
        points: code.encoding().points().iter().map(|&p| p as u16).collect(),
        block_count: blocks as u64,
        byte_len: data.len() as u64,
    };
    Ok((1..=params.n)
        .map(|node| ShardFile {
            header: ShardHeader {
                node_id: node as u16,
                ..header.clone()
            },
            symbols: encoded
                .iter()
                .flat_map(|shares| shares[node - 1].symbols.iter().map(|&v| v as u16))
                .collect(),
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct EncodeSummary {
    pub params: String,
    pub q: u32,
    pub blocks: u64,
    pub byte_len: u64,
    pub shards: Vec<PathBuf>,
}

pub fn encode_file(
    input: &Path,
    out_dir: &Path,
    opts: &CodeOptions,
) -> Result<EncodeSummary, CliError> {
    let data = fs::read(input).map_err(|e| CliError::io(input, e))?;
    let shards = encode_bytes(&data, opts)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut paths = Vec::with_capacity(shards.len());
    for shard in &shards {
        let path = shard_path(out_dir, shard.header.node_id as usize);
        shard.write(&path)?;
        paths.push(path);
    }
    let h = &shards[0].header;
    Ok(EncodeSummary {
        params: h.params()?.to_string(),
        q: h.q,
        blocks: h.block_count,
        byte_len: h.byte_len,
        shards: paths,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DamageSummary {
    pub erased: Vec<usize>,
    pub corrupted: Vec<usize>,
}

/// Deletes the shards of `erase` and overwrites the bodies of `corrupt` with
/// seeded-random symbols below q.
pub fn damage(
    dir: &Path,
    erase: &[usize],
    corrupt: &[usize],
    seed: u64,
) -> Result<DamageSummary, CliError> {
    let set = ShardSet::load(dir)?;
    let n = set.header.n as usize;
    let mut erase = erase.to_vec();
    let mut corrupt = corrupt.to_vec();
    erase.sort_unstable();
    erase.dedup();
    corrupt.sort_unstable();
    corrupt.dedup();
    if let Some(&bad) = erase.iter().chain(&corrupt).find(|&&i| i == 0 || i > n) {
        return Err(CliError::BadArgs(format!(
            "unknown node id {bad} (shards are 1..={n})"
        )));
    }
    if let Some(&both) = erase.iter().find(|i| corrupt.contains(i)) {
        return Err(CliError::BadArgs(format!(
            "node {both} is both erased and corrupted"
        )));
    }
    if let Some(&gone) = corrupt.iter().find(|&&i| set.shards[i - 1].is_none()) {
        return Err(CliError::BadArgs(format!(
            "node {gone} has no shard to corrupt"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = set.header.q;
    for &node in &corrupt {
        let mut shard = set.shards[node - 1].clone().unwrap();
        for v in shard.symbols.iter_mut() {
            *v = rng.gen_range(0..q) as u16;
        }
        shard.write(&shard_path(dir, node))?;
    }
    for &node in &erase {
        let path = shard_path(dir, node);
        if path.exists() {
            fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
        }
    }
    Ok(DamageSummary {
        erased: erase,
        corrupted: corrupt,
    })
}

/// Picks `count` nodes from `candidates` in ascending id order. Nodes with a
/// shard are always taken; a node whose shard is missing is taken as an
/// erased response while fewer than `s` erasures have been taken.
fn contact(
    set: &ShardSet,
    candidates: impl Iterator<Item = usize>,
    count: usize,
    s: usize,
) -> Option<Vec<usize>> {
    let mut chosen = Vec::with_capacity(count);
    let mut erased = 0;
    for node in candidates {
        if chosen.len() == count {
            break;
        }
        if set.shards[node - 1].is_some() {
            chosen.push(node);
        } else if erased < s {
            erased += 1;
            chosen.push(node);
        }
    }
    (chosen.len() == count).then_some(chosen)
}

#[derive(Clone, Debug, Serialize)]
pub struct RepairSummary {
    pub node: usize,
    pub s: usize,
    pub t: usize,
    pub helpers: Vec<usize>,
    pub blocks: u64,
    /// Δ·β symbols per block.
    pub symbols_downloaded: u64,
    pub output: PathBuf,
}

/// Regenerates the shard of `failed` from Δ = d + s + 2t helpers and writes
/// it to `out` (default: the node's own file in `dir`).
pub fn repair(
    dir: &Path,
    failed: usize,
    s: usize,
    t: usize,
    out: Option<&Path>,
    force: bool,
) -> Result<RepairSummary, CliError> {
    let set = ShardSet::load(dir)?;
    let header = &set.header;
    let params = header.params()?;
    if failed == 0 || failed > params.n {
        return Err(CliError::BadArgs(format!(
            "unknown node id {failed} (shards are 1..={})",
            params.n
        )));
    }
    if !params.repair_feasible(s, t) {
        return Err(CliError::Infeasible(format!(
            "repair with s={s}, t={t} needs d+s+2t = {} helpers, at most n-1 = {} exist",
            params.repair_connectivity(s, t),
            params.n - 1
        )));
    }
    let output = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| shard_path(dir, failed));
    if output.exists() && !force {
        return Err(CliError::BadArgs(format!(
            "{} already exists (use --force)",
            output.display()
        )));
    }
    let delta = params.repair_connectivity(s, t);
    let helpers =
        contact(&set, (1..=params.n).filter(|&i| i != failed), delta, s).ok_or_else(|| {
            CliError::Infeasible(format!(
                "repair needs {delta} helpers with at most {s} missing, only {} shards present",
                set.present().len()
            ))
        })?;

    let code = header.code()?;
    let alpha = params.alpha;
    let blocks = header.block_count as usize;
    let regenerated: Vec<Vec<u32>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let responses = helpers
                .iter()
                .map(|&h| match &set.shards[h - 1] {
                    Some(shard) => {
                        let share = NodeShare {
                            node: h,
                            symbols: shard.block(b, alpha),
                        };
                        Ok(Response::received(h, code.helper_symbols(&share, failed)?))
                    }
                    None => Ok(Response::erased(h)),
                })
                .collect::<regen_core::Result<Vec<_>>>()?;
            code.repair(&responses, failed, s, t)
                .map(|share| share.symbols)
        })
        .collect::<Result<_, _>>()?;

    let shard = ShardFile {
        header: ShardHeader {
            node_id: failed as u16,
            ..header.clone()
        },
        symbols: regenerated
            .into_iter()
            .flatten()
            .map(|v| v as u16)
            .collect(),
    };
    shard.write(&output)?;
    Ok(RepairSummary {
        node: failed,
        s,
        t,
        symbols_downloaded: (delta * params.beta * blocks) as u64,
        helpers,
        blocks: blocks as u64,
        output,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructSummary {
    pub s: usize,
    pub t: usize,
    pub nodes: Vec<usize>,
    pub blocks: u64,
    /// κ·α symbols per block.
    pub symbols_downloaded: u64,
    pub byte_len: u64,
}

/// Decodes the original bytes from κ = k + s + 2t nodes.
pub fn reconstruct_bytes(
    dir: &Path,
    s: usize,
    t: usize,
) -> Result<(Vec<u8>, ReconstructSummary), CliError> {
    let set = ShardSet::load(dir)?;
    let header = &set.header;
    let params = header.params()?;
    if !params.reconstruct_feasible(s, t) {
        return Err(CliError::Infeasible(format!(
            "reconstruction with s={s}, t={t} needs k+s+2t = {} nodes, only n = {} exist",
            params.reconstruct_connectivity(s, t),
            params.n
        )));
    }
    let kappa = params.reconstruct_connectivity(s, t);
    let nodes = contact(&set, 1..=params.n, kappa, s).ok_or_else(|| {
        CliError::Infeasible(format!(
            "reconstruction needs {kappa} nodes with at most {s} missing, only {} shards present",
            set.present().len()
        ))
    })?;

    let code = header.code()?;
    let alpha = params.alpha;
    let blocks = header.block_count as usize;
    let decoded: Vec<Vec<u32>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let responses: Vec<Response> = nodes
                .iter()
                .map(|&i| match &set.shards[i - 1] {
                    Some(shard) => Response::received(i, shard.block(b, alpha)),
                    None => Response::erased(i),
                })
                .collect();
            code.reconstruct(&responses, s, t)
        })
        .collect::<Result<_, _>>()?;

    let len =
        usize::try_from(header.byte_len).map_err(|_| CliError::Format("file too large".into()))?;
    if len > blocks * params.b {
        return Err(CliError::Format(format!(
            "header length {len} exceeds {blocks} blocks of {} bytes",
            params.b
        )));
    }
    let mut bytes = Vec::with_capacity(blocks * params.b);
    for (b, block) in decoded.iter().enumerate() {
        for &v in block {
            let byte = u8::try_from(v).map_err(|_| {
                CliError::Decode(format!("block {b} decodes to symbol {v}, not a byte"))
            })?;
            bytes.push(byte);
        }
    }
    if bytes[len..].iter().any(|&p| p != 0) {
        return Err(CliError::Decode(
            "nonzero padding after the recorded file length".into(),
        ));
    }
    bytes.truncate(len);
    let summary = ReconstructSummary {
        s,
        t,
        symbols_downloaded: (kappa * alpha * blocks) as u64,
        nodes,
        blocks: blocks as u64,
        byte_len: len as u64,
    };
    Ok((bytes, summary))
}

pub fn reconstruct(
    dir: &Path,
    s: usize,
    t: usize,
    out: &Path,
) -> Result<ReconstructSummary, CliError> {
    let (bytes, summary) = reconstruct_bytes(dir, s, t)?;
    fs::write(out, bytes).map_err(|e| CliError::io(out, e))?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeasibleEntry {
    pub s: usize,
    pub t: usize,
    /// d + s + 2t.
    pub delta: usize,
    /// k + s + 2t.
    pub kappa: usize,
}

/// What `info` prints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InfoReport {
    Code {
        mode: Mode,
        n: usize,
        k: usize,
        d: usize,
        alpha: usize,
        beta: usize,
        b: usize,
        capacity_bound: usize,
        meets_bound: bool,
        q: u32,
        feasible: Vec<FeasibleEntry>,
    },
    Bound {
        k: usize,
        d: usize,
        alpha: usize,
        beta: usize,
        bound: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        feasible: Vec<FeasibleEntry>,
    },
    Resilient {
        alpha: usize,
        beta: usize,
        delta: usize,
        kappa: usize,
        s: usize,
        t: usize,
        d: usize,
        k: usize,
        bound: usize,
    },
}

fn feasible_table(n: usize, k: usize, d: usize) -> Vec<FeasibleEntry> {
    let mut out = Vec::new();
    for t in 0..=n {
        for s in 0..=n {
            let (delta, kappa) = (d + s + 2 * t, k + s + 2 * t);
            if delta < n && kappa <= n {
                out.push(FeasibleEntry { s, t, delta, kappa });
            }
        }
    }
    out
}

pub fn info_code(params: &SystemParams, q: u32) -> InfoReport {
    let bound = params.capacity_bound();
    InfoReport::Code {
        mode: params.mode,
        n: params.n,
        k: params.k,
        d: params.d,
        alpha: params.alpha,
        beta: params.beta,
        b: params.b,
        capacity_bound: bound,
        meets_bound: params.b == bound,
        q,
        feasible: feasible_table(params.n, params.k, params.d),
    }
}

pub fn info_params(opts: &CodeOptions) -> Result<InfoReport, CliError> {
    let params = opts.params()?;
    Ok(info_code(&params, shard_field(params.n)?.modulus()))
}

pub fn info_dir(dir: &Path) -> Result<InfoReport, CliError> {
    let set = ShardSet::load(dir)?;
    Ok(info_code(&set.header.params()?, set.header.q))
}

/// The capacity bound for arbitrary (k, d, α, β), with the (s, t) table when
/// `n` is given.
pub fn info_bound(
    k: usize,
    d: usize,
    alpha: usize,
    beta: usize,
    n: Option<usize>,
) -> Result<InfoReport, CliError> {
    if k == 0 || d < k || alpha == 0 || beta == 0 {
        return Err(CliError::BadArgs(
            "need 1 <= k <= d and alpha, beta >= 1".into(),
        ));
    }
    if let Some(n) = n {
        if d >= n {
            return Err(CliError::BadArgs(format!("d = {d} must be below n = {n}")));
        }
    }
    Ok(InfoReport::Bound {
        k,
        d,
        alpha,
        beta,
        bound: capacity_bound(k, d, alpha, beta),
        n,
        feasible: n.map(|n| feasible_table(n, k, d)).unwrap_or_default(),
    })
}

/// The bound for a code that repairs from Δ nodes and reconstructs from κ
/// nodes while handling s erasures and t errors.
pub fn info_resilient(
    alpha: usize,
    beta: usize,
    delta: usize,
    kappa: usize,
    s: usize,
    t: usize,
) -> Result<InfoReport, CliError> {
    let r = resilient_bound(alpha, beta, delta, kappa, s, t)?;
    Ok(InfoReport::Resilient {
        alpha,
        beta,
        delta,
        kappa,
        s,
        t,
        d: r.d,
        k: r.k,
        bound: r.bound,
    })
}

impl std::fmt::Display for InfoReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let table = |f: &mut std::fmt::Formatter<'_>, rows: &[FeasibleEntry]| -> std::fmt::Result {
            writeln!(f, "feasible (s, t):")?;
            for r in rows {
                writeln!(
                    f,
                    "  s={} t={}  repair from {}  reconstruct from {}",
                    r.s, r.t, r.delta, r.kappa
                )?;
            }
            Ok(())
        };
        match self {
            InfoReport::Code {
                mode,
                n,
                k,
                d,
                alpha,
                beta,
                b,
                capacity_bound,
                meets_bound,
                q,
                feasible,
            } => {
                writeln!(f, "{mode} n={n} k={k} d={d} q={q}")?;
                writeln!(f, "alpha={alpha} beta={beta} B={b}")?;
                writeln!(
                    f,
                    "capacity bound {capacity_bound}; B {} bound",
                    if *meets_bound {
                        "meets"
                    } else {
                        "does not meet"
                    }
                )?;
                table(f, feasible)
            }
            InfoReport::Bound {
                k,
                d,
                alpha,
                beta,
                bound,
                feasible,
                ..
            } => {
                writeln!(f, "k={k} d={d} alpha={alpha} beta={beta}")?;
                writeln!(f, "capacity bound B <= {bound}")?;
                if !feasible.is_empty() {
                    table(f, feasible)?;
                }
                Ok(())
            }
            InfoReport::Resilient {
                alpha,
                beta,
                delta,
                kappa,
                s,
                t,
                d,
                k,
                bound,
            } => {
                writeln!(
                    f,
                    "alpha={alpha} beta={beta} delta={delta} kappa={kappa} s={s} t={t}"
                )?;
                writeln!(f, "effective d={d} k={k}")?;
                writeln!(f, "capacity bound B <= {bound}")
            }
        }
    }
}

pub fn simulate(path: &Path) -> Result<SimSummary, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(run_scenario(&Scenario::from_toml(&text)?)?)
}
