use std::time::Duration;

use perceplan::{run_strategy, LoadedInstance, Plan, Strategy, StrategyError, Task};

/// Metrics of one `run_strategy` call.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub queries: usize,
    pub feasible: usize,
    pub infeasible: usize,
    /// Equal to the budget when the run timed out.
    pub wall_time: Duration,
    pub timed_out: bool,
}

impl RunRecord {
    pub fn wall_ms(&self) -> f64 {
        self.wall_time.as_secs_f64() * 1000.0
    }
}

/// Repeated runs of one (instance, strategy, task) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub instance: String,
    pub strategy: Strategy,
    pub task: Task,
    pub budget: Duration,
    pub runs: Vec<RunRecord>,
    /// Feasible plans found by the first run.
    pub plans: Vec<Plan>,
}

impl RunMetrics {
    fn mean(&self, f: impl Fn(&RunRecord) -> f64) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        self.runs.iter().map(f).sum::<f64>() / self.runs.len() as f64
    }

    pub fn mean_queries(&self) -> f64 {
        self.mean(|r| r.queries as f64)
    }

    pub fn mean_feasible(&self) -> f64 {
        self.mean(|r| r.feasible as f64)
    }

    pub fn mean_infeasible(&self) -> f64 {
        self.mean(|r| r.infeasible as f64)
    }

    pub fn mean_wall_time(&self) -> Duration {
        Duration::from_secs_f64(self.mean(|r| r.wall_time.as_secs_f64()))
    }

    pub fn timed_out(&self) -> bool {
        self.runs.iter().any(|r| r.timed_out)
    }
}

/// Runs one strategy `runs` times, each on a fresh perception view. Counts
/// are identical across runs; only wall time varies.
pub fn run_experiment(
    instance: &LoadedInstance,
    id: &str,
    strategy: Strategy,
    task: Task,
    budget: Duration,
    runs: usize,
) -> Result<RunMetrics, StrategyError> {
    let mut metrics = RunMetrics {
        instance: id.to_string(),
        strategy,
        task,
        budget,
        runs: Vec::with_capacity(runs),
        plans: Vec::new(),
    };
    for run in 0..runs {
        let outcome = run_strategy(strategy, instance, task, budget)?;
        log::info!(
            "instance {id} {strategy} {task} run {run}: {} queries, {} feasible, {} infeasible, {:?}{}",
            outcome.query_count,
            outcome.feasible_plans.len(),
            outcome.infeasible_count,
            outcome.wall_time,
            if outcome.timed_out { " (timed out)" } else { "" }
        );
        metrics.runs.push(RunRecord {
            run,
            queries: outcome.query_count,
            feasible: outcome.feasible_plans.len(),
            infeasible: outcome.infeasible_count,
            wall_time: outcome.wall_time,
            timed_out: outcome.timed_out,
        });
        if run == 0 {
            metrics.plans = outcome.feasible_plans;
        }
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use perceplan::bundled;

    const BUDGET: Duration = Duration::from_secs(60);

    #[test]
    fn instance_two_pre_first() {
        let inst = bundled::instance(2).unwrap();
        let m = run_experiment(&inst, "2", Strategy::Pre, Task::First, BUDGET, 3).unwrap();
        assert_eq!(m.runs.len(), 3);
        for r in &m.runs {
            assert_eq!((r.queries, r.feasible, r.infeasible, r.timed_out), (3, 1, 0, false));
        }
        assert_eq!(m.mean_queries(), 3.0);
        assert_eq!(m.plans.len(), 1);
    }

    #[test]
    fn none_grades_every_emitted_plan() {
        let inst = bundled::instance(1).unwrap();
        let m = run_experiment(&inst, "1", Strategy::None, Task::Count(100), BUDGET, 1).unwrap();
        assert_eq!(m.runs[0].feasible + m.runs[0].infeasible, 100);
    }

    #[test]
    fn tiny_budget_keeps_partial_counts() {
        let inst = bundled::instance(3).unwrap();
        let budget = Duration::from_millis(5);
        let m = run_experiment(&inst, "3", Strategy::Filt, Task::Count(100), budget, 1).unwrap();
        let r = &m.runs[0];
        assert!(r.timed_out);
        assert_eq!(r.wall_time, budget);
        assert!(r.feasible < 100);
    }
}
