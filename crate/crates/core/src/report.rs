//! Plain-text summary of a finished run.
//!
//! The layout is stable so reports can be kept as golden files and diffed.

use std::fmt::Write;

use crate::data_layer::RecordFilter;
use crate::proof_dag::Status;
use crate::simulation::{EventLog, Mechanism, Origin, World};

/// Renders the final state of `world` and a digest of `log`.
pub fn render(scenario: &str, world: &World, log: &EventLog) -> String {
    let mut out = String::new();
    // Writing to a String cannot fail.
    let _ = write_report(&mut out, scenario, world, log);
    out
}

fn write_report(
    out: &mut String,
    scenario: &str,
    world: &World,
    log: &EventLog,
) -> std::fmt::Result {
    let entries = log.entries();
    let top = entries.iter().filter(|e| e.origin == Origin::Top).count();
    let failed = entries.iter().filter(|e| !e.outcome.ok).count();

    writeln!(out, "== summary")?;
    writeln!(out, "scenario: {scenario}")?;
    writeln!(out, "final tick: {}", world.now)?;
    writeln!(
        out,
        "events: {} ({top} scheduled, {} emitted, {failed} failed)",
        entries.len(),
        entries.len() - top
    )?;

    writeln!(out, "\n== balances")?;
    for (account, amount) in world.ledger.balances() {
        writeln!(out, "{account}: {amount}")?;
    }
    writeln!(out, "supply: {}", world.ledger.total_supply())?;
    writeln!(out, "escrowed: {}", world.ledger.escrowed_total())?;

    writeln!(out, "\n== escrows")?;
    for (id, e) in world.ledger.escrows() {
        writeln!(
            out,
            "{id}: {} held for {} ({})",
            e.amount, e.owner, e.context
        )?;
    }

    writeln!(out, "\n== records")?;
    for r in world.registry.list(&RecordFilter::default()) {
        let listing = match world.tcr.listing(&r.record_id) {
            Some(l) => format!("{} weight {}", l.state, l.weight),
            None => "unlisted".to_string(),
        };
        writeln!(
            out,
            "{} by {} at {}: {} {} right={} [{listing}]",
            r.record_id,
            r.author,
            r.submitted_at,
            r.filetype,
            r.file.short(),
            r.right_to_use
        )?;
    }

    writeln!(out, "\n== statements")?;
    for (id, _) in world.dag.statements() {
        let status = match world.dag.status(id) {
            Ok(Status::Proven) => "proven",
            Ok(Status::Open) => "open",
            Err(_) => "unknown",
        };
        let n = world.dag.justifications_for(id).count();
        writeln!(out, "{id}: {status}, {n} justification(s)")?;
    }

    writeln!(out, "\n== proof trees")?;
    let mut targets: Vec<_> = world
        .mechanisms
        .values()
        .map(|m| m.target().clone())
        .collect();
    targets.sort();
    targets.dedup();
    for target in targets {
        let trees = world.dag.proof_trees(&target);
        writeln!(out, "{target}: {} tree(s)", trees.len())?;
        for (i, t) in trees.iter().enumerate() {
            let mut used: Vec<_> = t
                .choices
                .values()
                .filter_map(|j| world.dag.justification(j))
                .collect();
            used.sort_by_key(|j| j.seq);
            let records: Vec<&str> = used.iter().map(|j| j.record_id.as_str()).collect();
            let who: Vec<&str> = t.contributors.iter().map(|a| a.as_str()).collect();
            writeln!(
                out,
                "  tree {i}: records {} contributors {}",
                records.join(","),
                who.join(",")
            )?;
        }
    }

    writeln!(out, "\n== mechanisms")?;
    for (name, m) in &world.mechanisms {
        match m {
            Mechanism::Halving(s) => writeln!(
                out,
                "{name}: halving on {} policy {}, {} paid over {} proof(s), next {}{}",
                s.target,
                s.policy,
                s.total_paid(),
                s.proofs_paid(),
                s.next_payout(),
                if s.is_closed() { ", closed" } else { "" }
            )?,
            Mechanism::Fixed(p) => writeln!(
                out,
                "{name}: fixed prize on {} policy {}, {}-of-{} signers, {}",
                p.target,
                p.policy,
                p.threshold(),
                p.signers().len(),
                if p.is_paid() { "paid" } else { "unpaid" }
            )?,
        }
    }
    for b in &world.branches {
        let stakes: Vec<String> = b.stakes().map(|(a, n)| format!("{a}:{n}")).collect();
        writeln!(
            out,
            "branch {} rho {} stakes {}{}",
            b.contribution.short(),
            b.rho,
            stakes.join(","),
            if b.is_settled() { ", settled" } else { "" }
        )?;
    }

    writeln!(out, "\n== awards")?;
    for a in &world.awards {
        writeln!(
            out,
            "tick {} {} tree {}:",
            a.tick, a.mechanism, a.tree_index
        )?;
        for p in &a.payouts {
            writeln!(out, "  {} {} ({})", p.account, p.amount, p.role)?;
        }
    }

    writeln!(out, "\n== license charges")?;
    for c in world.licenses.charges() {
        writeln!(
            out,
            "tick {}: {} paid {} to {} for {}",
            c.at, c.importer, c.fee, c.beneficiary, c.record_id
        )?;
    }

    writeln!(out, "\n== log")?;
    for e in entries {
        writeln!(out, "{e}")?;
    }
    Ok(())
}
