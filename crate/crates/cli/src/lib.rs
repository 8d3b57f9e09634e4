//! Command-line front end: reads a poll CSV and a TOML config, runs the
//! engine and writes JSON reports or SVG figures.

pub mod config;
mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use koalition::viz::{self, PoeBar, Provenance};
use koalition::{
    distribution_series, estimate_poe_batch, fan_chart_data, forecast_distribution_series, inflate, parse_polls,
    poe_series, sample_parliaments, seat_distribution, strongest_member, symmetric_prior, EventSpec, ForecastSpec,
    Model, Poll,
};
use serde_json::json;

pub use config::{Config, ConfigError, NamedCoalition};

#[derive(Parser, Debug)]
#[command(name = "koalition", version, about = "Coalition majority nowcasts and forecasts from opinion polls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Poll table (CSV).
    #[arg(long)]
    polls: PathBuf,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Nowcast date, YYYY-MM-DD.
    #[arg(long)]
    as_of: NaiveDate,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `draws` from the config.
    #[arg(long)]
    draws: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Majority probabilities and party shares as of a date.
    Nowcast {
        #[command(flatten)]
        common: Common,
    },
    /// The nowcast extrapolated to election day.
    Forecast {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        election_date: Option<NaiveDate>,
    },
    /// Render one figure as SVG.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        figure: Figure,
        #[arg(long)]
        election_date: Option<NaiveDate>,
        /// Coalition from the config; defaults to the first one.
        #[arg(long)]
        coalition: Option<String>,
    },
    /// A few simulated parliaments.
    Parliaments {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        k: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Figure {
    Classic,
    PoeBars,
    Density,
    Parliaments,
    Ridgeline,
    PoeTimeline,
    Fan,
    ForecastRidgeline,
}

/// Ways a run can fail, with the exit code each maps to.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data { code: String, file: Option<PathBuf>, line: Option<u64>, message: String },
    Config { file: Option<PathBuf>, message: String },
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data { .. } => 2,
            Failure::Config { .. } => 3,
        }
    }

    fn to_json(&self) -> String {
        let value = match self {
            Failure::Usage(message) => json!({ "error": "usage", "message": message, "usage": usage() }),
            Failure::Data { code, file, line, message } => json!({
                "error": code,
                "file": file.as_ref().map(|f| f.display().to_string()),
                "line": line,
                "message": message,
            }),
            Failure::Config { file, message } => json!({
                "error": "config",
                "file": file.as_ref().map(|f| f.display().to_string()),
                "message": message,
            }),
        };
        value.to_string()
    }
}

fn usage() -> String {
    Cli::command().render_usage().to_string()
}

struct Context {
    config: Config,
    config_path: PathBuf,
    polls: Vec<Poll>,
    polls_path: PathBuf,
    model: Model,
    as_of: NaiveDate,
    seed: u64,
    m: usize,
}

impl Context {
    fn load(common: &Common) -> Result<Self, Failure> {
        let config_err = |message: String| Failure::Config { file: Some(common.config.clone()), message };
        let text = fs::read_to_string(&common.config).map_err(|e| config_err(e.to_string()))?;
        let config = Config::parse(&text).map_err(|e| config_err(e.0))?;
        let registry = config.registry().map_err(|e| config_err(e.0))?;

        let data_err = |code: &str, line: Option<u64>, message: String| Failure::Data {
            code: code.to_owned(),
            file: Some(common.polls.clone()),
            line,
            message,
        };
        let csv = fs::read_to_string(&common.polls).map_err(|e| data_err("io", None, e.to_string()))?;
        let polls = parse_polls(&csv, &registry).map_err(|e| data_err("bad-polls", Some(e.line()), e.to_string()))?;

        let prior_alpha = symmetric_prior(&registry, config.prior_alpha);
        let model = Model { registry, rules: config.rules, pooling: config.pooling, prior_alpha };
        Ok(Context {
            seed: common.seed.unwrap_or(config.seed),
            m: common.draws.unwrap_or(config.draws),
            config,
            config_path: common.config.clone(),
            polls,
            polls_path: common.polls.clone(),
            model,
            as_of: common.as_of,
        })
    }

    /// Maps an engine error to the failure class of whatever caused it.
    fn engine(&self, e: koalition::Error) -> Failure {
        use koalition::Error as E;
        match e {
            E::NoPolls { .. } | E::NoData => Failure::Data {
                code: e.code().to_owned(),
                file: Some(self.polls_path.clone()),
                line: None,
                message: e.to_string(),
            },
            E::InsufficientDraws { .. } | E::PastElection { .. } | E::EmptyRequest => Failure::Usage(e.to_string()),
            _ => Failure::Config { file: Some(self.config_path.clone()), message: e.to_string() },
        }
    }

    fn coalition(&self, name: Option<&str>) -> Result<&NamedCoalition, Failure> {
        let found = match name {
            Some(n) => self.config.coalition(n).map_err(|e| e.0),
            None => self.config.coalitions.first().ok_or_else(|| "the config defines no coalitions".to_owned()),
        };
        found.map_err(|message| Failure::Config { file: Some(self.config_path.clone()), message })
    }

    fn election_date(&self, flag: Option<NaiveDate>) -> Result<NaiveDate, Failure> {
        flag.or(self.config.election_date)
            .ok_or_else(|| Failure::Usage("an election date is needed: pass --election-date or set election_date".into()))
    }

    fn provenance(&self) -> Provenance {
        Provenance { seed: self.seed, m: self.m, as_of: self.as_of }
    }

    /// `history_rows` dates ending at as-of, `history_step_days` apart.
    fn history_dates(&self) -> Vec<NaiveDate> {
        let step = i64::from(self.config.plot.history_step_days);
        (0..i64::from(self.config.plot.history_rows))
            .rev()
            .map(|j| self.as_of - Duration::days(j * step))
            .collect()
    }

    fn polls_until_as_of(&self) -> Vec<Poll> {
        self.polls.iter().filter(|p| p.publish_date <= self.as_of).cloned().collect()
    }

    fn nowcast_report(&self, horizon: Option<(NaiveDate, f64)>) -> Result<serde_json::Value, Failure> {
        let now = self.model.nowcast(&self.polls, self.as_of).map_err(|e| self.engine(e))?;
        let posterior = match horizon {
            Some((election, tau)) => {
                let spec = ForecastSpec::new(self.as_of, election, tau).map_err(|e| self.engine(e))?;
                inflate(&now, &spec, &self.model.prior_alpha).map_err(|e| self.engine(e))?
            }
            None => now.clone(),
        };
        let events: Vec<EventSpec> =
            self.config.coalitions.iter().map(|c| EventSpec::coalition_majority(&c.parties)).collect();
        let batch = estimate_poe_batch(&posterior, &self.model.rules, &events, self.m, self.seed).map_err(|e| self.engine(e))?;
        let mut leaders = Vec::new();
        for c in &self.config.coalitions {
            leaders.push(strongest_member(&posterior, &c.parties).map_err(|e| self.engine(e))?);
        }
        let intervals = report::share_intervals(&posterior, self.m, self.seed).map_err(|e| self.engine(e))?;
        let input = report::ReportInput {
            config: &self.config,
            as_of: self.as_of,
            seed: self.seed,
            m: self.m,
            nowcast: &now,
            posterior: &posterior,
            batch: &batch,
            leaders: &leaders,
            intervals: &intervals,
        };
        Ok(report::poe_report(&input, horizon))
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), Failure> {
    let io_err = |e: std::io::Error| Failure::Data {
        code: "io".into(),
        file: out.map(Path::to_path_buf),
        line: None,
        message: e.to_string(),
    };
    match out {
        Some(path) => fs::write(path, bytes).map_err(io_err),
        None => stdout.write_all(bytes).map_err(io_err),
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Nowcast { common } => {
            let ctx = Context::load(&common)?;
            let report = ctx.nowcast_report(None)?;
            write_output(common.out.as_deref(), report::to_json_bytes(report).as_slice(), stdout)
        }
        Command::Forecast { common, election_date } => {
            let ctx = Context::load(&common)?;
            let election = ctx.election_date(election_date)?;
            let report = ctx.nowcast_report(Some((election, ctx.config.tau)))?;
            write_output(common.out.as_deref(), report::to_json_bytes(report).as_slice(), stdout)
        }
        Command::Parliaments { common, k } => {
            let ctx = Context::load(&common)?;
            let posterior = ctx.model.nowcast(&ctx.polls, ctx.as_of).map_err(|e| ctx.engine(e))?;
            let allocs = sample_parliaments(&posterior, &ctx.model.rules, k, ctx.seed).map_err(|e| ctx.engine(e))?;
            let report = report::parliaments_report(&ctx.model, ctx.as_of, ctx.seed, &allocs);
            write_output(common.out.as_deref(), report::to_json_bytes(report).as_slice(), stdout)
        }
        Command::Plot { common, figure, election_date, coalition } => {
            let Some(out) = common.out.clone() else {
                return Err(Failure::Usage("plot needs --out".into()));
            };
            let ctx = Context::load(&common)?;
            let svg = plot(&ctx, figure, election_date, coalition.as_deref())?;
            write_output(Some(&out), svg.as_str().as_bytes(), stdout)
        }
    }
}

fn plot(ctx: &Context, figure: Figure, election_date: Option<NaiveDate>, coalition: Option<&str>) -> Result<viz::SvgDocument, Failure> {
    let theme = &ctx.config.theme;
    let prov = ctx.provenance();
    let registry = &ctx.model.registry;
    let rules = &ctx.model.rules;
    let err = |e| ctx.engine(e);
    let doc = match figure {
        Figure::Classic => {
            let polls = ctx.polls_until_as_of();
            let latest = polls.last().ok_or_else(|| err(koalition::Error::NoData))?;
            viz::render_classic_bars(latest, registry, &prov, theme)
        }
        Figure::PoeBars => {
            let posterior = ctx.model.nowcast(&ctx.polls, ctx.as_of).map_err(err)?;
            let events: Vec<EventSpec> = ctx.config.coalitions.iter().map(|c| EventSpec::coalition_majority(&c.parties)).collect();
            let batch = estimate_poe_batch(&posterior, rules, &events, ctx.m, ctx.seed).map_err(err)?;
            let mut bars = Vec::new();
            for (c, result) in ctx.config.coalitions.iter().zip(batch.results) {
                let leader = strongest_member(&posterior, &c.parties).map_err(err)?;
                bars.push(PoeBar { label: c.name.clone(), result, leader });
            }
            viz::render_poe_bars(&bars, registry, &prov, theme)
        }
        Figure::Density => {
            let c = ctx.coalition(coalition)?;
            let posterior = ctx.model.nowcast(&ctx.polls, ctx.as_of).map_err(err)?;
            let dist = seat_distribution(&posterior, rules, &c.parties, ctx.m, ctx.seed).map_err(err)?;
            viz::render_seat_density(&dist, &prov, theme)
        }
        Figure::Parliaments => {
            let c = ctx.coalition(coalition)?;
            let posterior = ctx.model.nowcast(&ctx.polls, ctx.as_of).map_err(err)?;
            let allocs = sample_parliaments(&posterior, rules, ctx.config.plot.parliaments, ctx.seed).map_err(err)?;
            let ids: Vec<koalition::PartyId> = c.parties.iter().map(|p| koalition::PartyId::new(p.as_str())).collect();
            viz::render_parliaments(&allocs, &ids, registry, &prov, theme)
        }
        Figure::Ridgeline => {
            let c = ctx.coalition(coalition)?;
            let series = distribution_series(&ctx.model, &ctx.polls, &ctx.history_dates(), &c.parties, ctx.m, ctx.seed).map_err(err)?;
            viz::render_ridgeline(&series.points, &prov, theme)
        }
        Figure::PoeTimeline => {
            let c = ctx.coalition(coalition)?;
            let event = EventSpec::coalition_majority(&c.parties);
            let series = poe_series(&ctx.model, &ctx.polls, &ctx.history_dates(), &event, ctx.m, ctx.seed).map_err(err)?;
            viz::render_poe_timeline(&series.points, &prov, theme)
        }
        Figure::Fan => {
            let election = ctx.election_date(election_date)?;
            let spec = ForecastSpec::new(ctx.as_of, election, ctx.config.tau).map_err(err)?;
            let polls = ctx.polls_until_as_of();
            let fan = fan_chart_data(&ctx.model, &polls, &spec, ctx.config.plot.fan_grid_days, ctx.m, ctx.seed).map_err(err)?;
            viz::render_fan_chart(&fan, &polls, registry, &prov, theme)
        }
        Figure::ForecastRidgeline => {
            let c = ctx.coalition(coalition)?;
            let election = ctx.election_date(election_date)?;
            let dates = ctx.history_dates();
            let now = distribution_series(&ctx.model, &ctx.polls, &dates, &c.parties, ctx.m, ctx.seed).map_err(err)?;
            let fc = forecast_distribution_series(&ctx.model, &ctx.polls, &dates, &c.parties, election, ctx.config.tau, ctx.m, ctx.seed)
                .map_err(err)?;
            viz::render_forecast_ridgeline(&now.points, &fc.points, &prov, theme)
        }
    };
    Ok(doc)
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code. Errors are written to `stderr` as one line of JSON.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let failure = Failure::Usage(e.to_string().trim_end().to_owned());
            let _ = writeln!(stderr, "{}", failure.to_json());
            return failure.exit_code();
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(failure) => {
            let _ = writeln!(stderr, "{}", failure.to_json());
            failure.exit_code()
        }
    }
}
