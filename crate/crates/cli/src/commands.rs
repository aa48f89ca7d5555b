use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use ioht_core::chart::{render_chart, ChartOptions, ChartStyle, Series};
use ioht_core::crypto::{CipherKey, CipherSuite};
use ioht_core::dp::{noisy_query, perturb_series, Aggregate, DpParams, DpQuery, Field};
use ioht_core::experiments::{
    epsilon_sweep_csv, perturbed_chart_series, perturbed_series_csv, run_epsilon_sweep, run_size_sweep,
    run_vr_sweep, size_sweep_csv, size_sweep_series, vr_sweep_csv, vr_sweep_series, EpsilonSweepSpec,
};
use ioht_core::inference::{infer, InferenceConfig, MetricsReport, ReconMode};
use ioht_core::pipeline::{run_pipeline, EnergyModel, PipelineConfig, DEFAULT_BATCH_SAMPLES};
use ioht_core::rng::derive_stream;
use ioht_core::trace::{
    generate_population, generate_trace, load_csv, load_population_csv, save_csv, write_population_csv,
    PersonRecord, PhysiologicBounds, SensorKind, SyntheticSpec, TemperatureScale, Trace, Unit,
};

use crate::args::*;
use crate::UsageError;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(GenCommand::Trace { synth, output }) => gen_trace(&synth, &output),
        Command::Gen(GenCommand::Population { people, seed, output }) => gen_population(people, seed, &output),
        Command::Infer(a) => cmd_infer(&a),
        Command::VrSweep(a) => cmd_vr_sweep(&a),
        Command::SizeSweep(a) => cmd_size_sweep(&a),
        Command::Dp(a) => cmd_dp(&a),
        Command::EpsilonSweep(a) => cmd_epsilon_sweep(&a),
        Command::Pipeline(a) => cmd_pipeline(&a),
        Command::Chart(a) => cmd_chart(&a),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse<T: std::str::FromStr<Err = ioht_core::Error>>(s: &str) -> Result<T> {
    s.parse::<T>().map_err(|e| usage(e.to_string()))
}

fn out_dir(output: &OutputArgs) -> Result<Option<PathBuf>> {
    match &output.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn synth_spec(a: &SynthArgs) -> Result<SyntheticSpec> {
    Ok(SyntheticSpec {
        kind: parse(&a.kind)?,
        n: a.n,
        period: a.period,
        seed: a.seed,
        baseline: a.baseline,
        drift_amplitude: a.drift,
        noise_scale: a.noise,
    })
}

fn load_trace(a: &TraceArgs) -> Result<Trace> {
    let spec = synth_spec(&a.synth)?;
    match &a.input {
        Some(path) => {
            let kind: SensorKind = spec.kind;
            let unit: Unit = match &a.unit {
                Some(u) => parse(u)?,
                None => kind.default_unit(),
            };
            Ok(load_csv(path, kind, unit)?)
        }
        None => Ok(generate_trace(&spec)?),
    }
}

fn load_people(a: &PopulationArgs) -> Result<Vec<PersonRecord>> {
    match &a.population {
        Some(path) => {
            let scale = match a.temperature_scale {
                TempScaleArg::Celsius => TemperatureScale::Celsius,
                TempScaleArg::Fahrenheit => TemperatureScale::Fahrenheit,
            };
            Ok(load_population_csv(path, scale, &PhysiologicBounds::default())?)
        }
        None => Ok(generate_population(a.people, a.population_seed)),
    }
}

fn recon_mode(r: ReconArg) -> ReconMode {
    match r {
        ReconArg::Linear => ReconMode::Linear,
        ReconArg::StepHold => ReconMode::StepHold,
    }
}

fn trace_series(trace: &Trace, name: &str, values: &[f64]) -> Series {
    Series::new(name, trace.times().iter().zip(values).map(|(&t, &v)| (t as f64 / 60.0, v)).collect())
}

fn gen_trace(synth: &SynthArgs, output: &OutputArgs) -> Result<()> {
    let trace = generate_trace(&synth_spec(synth)?)?;
    if let Some(dir) = out_dir(output)? {
        save_csv(&trace, dir.join("trace.csv"))?;
    }
    if output.json {
        print_json(&trace)?;
    } else if output.out.is_none() {
        trace.write_csv(std::io::stdout().lock())?;
    } else {
        println!("wrote {} samples ({}, {})", trace.len(), trace.kind(), trace.unit());
    }
    Ok(())
}

fn gen_population(people: usize, seed: u64, output: &OutputArgs) -> Result<()> {
    let pop = generate_population(people, seed);
    if let Some(dir) = out_dir(output)? {
        let mut buf = Vec::new();
        write_population_csv(&pop, &mut buf)?;
        fs::write(dir.join("population.csv"), buf)?;
    }
    if output.json {
        print_json(&pop)?;
    } else if output.out.is_none() {
        write_population_csv(&pop, std::io::stdout().lock())?;
    } else {
        let mean = pop.iter().map(|p| p.heart_rate).sum::<f64>() / pop.len().max(1) as f64;
        println!("wrote {} records, mean heart rate {mean:.2}", pop.len());
    }
    Ok(())
}

fn cmd_infer(a: &InferArgs) -> Result<()> {
    let trace = load_trace(&a.trace)?;
    let config = InferenceConfig::new(a.vr, a.beacon, recon_mode(a.recon))?;
    let out = infer(&trace, &config)?;
    let report = MetricsReport::new(out.metrics, &config);

    if let Some(dir) = out_dir(&a.output)? {
        write_file(&dir, "metrics.json", &serde_json::to_string_pretty(&report)?)?;
        let mut csv = String::from("t,original,reconstructed,transmitted\n");
        let mut sent = out.tx.indices().peekable();
        for (i, (s, r)) in trace.samples().iter().zip(&out.recon.values).enumerate() {
            let flag = if sent.peek() == Some(&i) {
                sent.next();
                1
            } else {
                0
            };
            csv.push_str(&format!("{},{},{},{}\n", s.t, s.value, r, flag));
        }
        write_file(&dir, "reconstruction.csv", &csv)?;
        let series = [
            trace_series(&trace, "original", &trace.values()),
            trace_series(&trace, "inferred", &out.recon.values),
        ];
        let opts = ChartOptions {
            title: format!("{} at {}% variance rate", trace.kind(), 100.0 * a.vr),
            x_label: "minutes".into(),
            y_label: trace.unit().to_string(),
            ..Default::default()
        };
        render_chart(&series, ChartStyle::Line, &opts, dir.join("reconstruction.svg"))?;
    }

    if a.output.json {
        return print_json(&report);
    }
    let m = &out.metrics;
    println!("samples sensed      {}", m.n);
    println!("samples transmitted {}", m.t);
    println!("savings ratio       {:.1}%", m.sr);
    println!("efficiency ratio    {:.3}", m.er);
    match m.ar {
        Some(ar) => println!("accuracy ratio      {ar:.1}%"),
        None => println!("accuracy ratio      n/a"),
    }
    println!("S upper / lower     {:.1} / {:.1}", m.s_upper, m.s_lower);
    println!("S diff              {:.1}", m.s_diff);
    Ok(())
}

fn cmd_vr_sweep(a: &VrSweepArgs) -> Result<()> {
    let trace = load_trace(&a.trace)?;
    let rows = run_vr_sweep(&trace, &a.grid, a.beacon, recon_mode(a.recon))?;
    if let Some(dir) = out_dir(&a.output)? {
        write_file(&dir, "vr_sweep.csv", &vr_sweep_csv(&rows))?;
        let opts = ChartOptions {
            title: "Savings by variance rate".into(),
            x_label: "variance rate (%)".into(),
            y_label: "savings (%)".into(),
            ..Default::default()
        };
        render_chart(&vr_sweep_series(&rows), ChartStyle::Line, &opts, dir.join("vr_sweep.svg"))?;
    }
    if a.output.json {
        return print_json(&rows);
    }
    println!("{:>7} {:>6} {:>6} {:>8} {:>7} {:>10}", "VR", "T", "SR%", "ER", "AR%", "S_diff");
    for r in &rows {
        let ar = r.ar.map_or("n/a".to_string(), |v| format!("{v:.1}"));
        println!(
            "{:>6.1}% {:>6} {:>6.1} {:>8.3} {:>7} {:>10.1}",
            100.0 * r.vr,
            r.t,
            r.sr,
            r.er,
            ar,
            r.s_diff
        );
    }
    Ok(())
}

fn cmd_size_sweep(a: &SizeSweepArgs) -> Result<()> {
    let rows = run_size_sweep(&a.grid)?;
    if let Some(dir) = out_dir(&a.output)? {
        write_file(&dir, "size_sweep.csv", &size_sweep_csv(&rows))?;
        let opts = ChartOptions {
            title: "Ciphertext size by savings".into(),
            x_label: "savings (%)".into(),
            y_label: "bytes".into(),
            ..Default::default()
        };
        render_chart(&size_sweep_series(&rows), ChartStyle::Line, &opts, dir.join("size_sweep.svg"))?;
    }
    if a.output.json {
        return print_json(&rows);
    }
    println!("{:>8} {:>10} {:>12} {:>8} {:>13}", "savings", "plaintext", "aes-128-ecb", "des-ecb", "blowfish-ecb");
    for r in &rows {
        println!(
            "{:>7.1}% {:>10} {:>12} {:>8} {:>13}",
            r.savings, r.plaintext_bytes, r.aes_128_ecb, r.des_ecb, r.blowfish_ecb
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct DpOutput {
    epsilon: f64,
    sensitivity: f64,
    query: DpQuery,
    real_result: f64,
    out_results: Vec<f64>,
    mean_abs_deviation: f64,
}

fn cmd_dp(a: &DpArgs) -> Result<()> {
    let aggregate: Aggregate = parse(&a.query)?;
    let field: Field = parse(&a.field)?;
    let query = DpQuery::new(aggregate, Some(field))?;
    let params = DpParams::new(a.epsilon, a.sensitivity)?;
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let people = load_people(&a.population)?;

    let mut out_results = Vec::with_capacity(a.trials);
    let mut real_result = 0.0;
    for trial in 0..a.trials {
        let mut rng = derive_stream(a.seed, trial as u64);
        let r = noisy_query(&people, &query, &params, &mut rng)?;
        real_result = r.real_result;
        out_results.push(r.out_result);
    }
    let mean_abs_deviation =
        out_results.iter().map(|o| (o - real_result).abs()).sum::<f64>() / a.trials as f64;
    let output = DpOutput {
        epsilon: params.epsilon(),
        sensitivity: params.sensitivity(),
        query,
        real_result,
        out_results,
        mean_abs_deviation,
    };

    if let Some(dir) = out_dir(&a.output)? {
        write_file(&dir, "dp.json", &serde_json::to_string_pretty(&output)?)?;
        let original: Vec<f64> = people.iter().map(|p| field.of(p)).collect();
        let mut csv = String::from("trial,index,original,noised\n");
        for trial in 0..a.trials {
            let mut rng = derive_stream(a.seed, (1u64 << 32) | trial as u64);
            let noised = perturb_series(&original, &params, &mut rng);
            for (i, (o, n)) in original.iter().zip(&noised).enumerate() {
                csv.push_str(&format!("{trial},{i},{o},{n}\n"));
            }
        }
        write_file(&dir, "dp_series.csv", &csv)?;
    }

    if a.output.json {
        return print_json(&output);
    }
    println!("query          {query}");
    println!("epsilon        {}", output.epsilon);
    println!("sensitivity    {}", output.sensitivity);
    println!("real result    {:.2}", output.real_result);
    for (i, o) in output.out_results.iter().enumerate().take(10) {
        println!("noised #{i:<5} {o:.2}");
    }
    if output.out_results.len() > 10 {
        println!("... {} more", output.out_results.len() - 10);
    }
    println!("mean |noise|   {:.4}", output.mean_abs_deviation);
    Ok(())
}

fn cmd_epsilon_sweep(a: &EpsilonSweepArgs) -> Result<()> {
    let people = load_people(&a.population)?;
    let spec = EpsilonSweepSpec {
        grid: a.grid.clone(),
        trials: a.trials,
        seed: a.seed,
        sensitivity: a.sensitivity,
        field: parse(&a.field)?,
    };
    let sweep = run_epsilon_sweep(&people, &spec)?;
    if let Some(dir) = out_dir(&a.output)? {
        write_file(&dir, "epsilon_sweep.csv", &epsilon_sweep_csv(&sweep.rows))?;
        write_file(&dir, "epsilon_sweep.json", &serde_json::to_string_pretty(&sweep.rows)?)?;
        for s in &sweep.series {
            let stem = format!("perturbed_eps_{}", s.epsilon);
            write_file(&dir, &format!("{stem}.csv"), &perturbed_series_csv(s))?;
            let opts = ChartOptions {
                title: format!("Laplace noise, epsilon = {}", s.epsilon),
                x_label: "record index".into(),
                y_label: spec.field.to_string(),
                ..Default::default()
            };
            render_chart(&perturbed_chart_series(s), ChartStyle::Line, &opts, dir.join(format!("{stem}.svg")))?;
        }
    }
    if a.output.json {
        return print_json(&sweep.rows);
    }
    println!("{:>8} {:>8} {:>10} {:>12} {:>12}", "epsilon", "scale", "real mean", "noised mean", "mean |dev|");
    for r in &sweep.rows {
        println!(
            "{:>8} {:>8.2} {:>10.2} {:>12.2} {:>12.4}",
            r.epsilon, r.scale, r.real_mean, r.noised_mean, r.mean_abs_dev
        );
    }
    Ok(())
}

fn pipeline_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut config = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let config: PipelineConfig =
                serde_json::from_str(&text).map_err(ioht_core::Error::from).with_context(|| format!("parsing {}", path.display()))?;
            config
        }
        None => {
            let suite: CipherSuite = parse(a.suite.as_deref().unwrap_or("aes-128-ecb"))?;
            let key = a
                .key
                .as_deref()
                .ok_or_else(|| usage("--key is required when no --config is given"))?;
            PipelineConfig {
                inference: InferenceConfig::default(),
                suite,
                key: CipherKey::from_hex(key)?,
                dp: DpParams::new(0.5, 1.0)?,
                queries: vec![
                    DpQuery::mean(Field::HeartRate),
                    DpQuery::mean(Field::BodyTemperature),
                    DpQuery::count(),
                ],
                batch_samples: DEFAULT_BATCH_SAMPLES,
                master_seed: 0,
                energy: EnergyModel::default(),
            }
        }
    };
    if let Some(vr) = a.vr {
        config.inference.vr = vr;
    }
    if let Some(k) = a.beacon {
        config.inference.beacon_period = Some(k);
    }
    if let Some(s) = &a.suite {
        config.suite = parse(s)?;
    }
    if let Some(k) = &a.key {
        config.key = CipherKey::from_hex(k)?;
    }
    if a.epsilon.is_some() || a.sensitivity.is_some() {
        config.dp = DpParams::new(
            a.epsilon.unwrap_or(config.dp.epsilon()),
            a.sensitivity.unwrap_or(config.dp.sensitivity()),
        )?;
    }
    if let Some(b) = a.batch {
        config.batch_samples = b;
    }
    if let Some(s) = a.master_seed {
        config.master_seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<()> {
    let config = pipeline_config(a)?;
    let trace = load_trace(&a.trace)?;
    let people = load_people(&a.population)?;
    let report = run_pipeline(&trace, &config, &people)?;

    if let Some(dir) = out_dir(&a.output)? {
        write_file(&dir, "report.json", &report.to_json()?)?;
        let mut buf = Vec::new();
        report.log.write_csv(&mut buf)?;
        fs::write(dir.join("hops.csv"), buf)?;
        let mut buf = Vec::new();
        report.baseline_log.write_csv(&mut buf)?;
        fs::write(dir.join("baseline_hops.csv"), buf)?;
    }
    if a.output.json {
        println!("{}", report.to_json()?);
        return Ok(());
    }
    let m = &report.inference_metrics.metrics;
    println!("transmitted {} of {} samples ({:.1}% saved)", m.t, m.n, m.sr);
    println!("{:<18} {:>8} {:>13} {:>16}", "hop", "messages", "payload bytes", "ciphertext bytes");
    for e in &report.log.entries {
        let ct = e.ciphertext_bytes.map_or("-".to_string(), |c| c.to_string());
        println!("{:<18} {:>8} {:>13} {:>16}", e.hop.to_string(), e.messages, e.payload_bytes, ct);
    }
    println!(
        "energy model      {} J/byte + {} J/message",
        report.energy_model.joules_per_byte_tx, report.energy_model.joules_per_message_overhead
    );
    println!("energy baseline   {:.6} J", report.energy_baseline);
    println!("energy actual     {:.6} J", report.energy_actual);
    if let Some(p) = report.energy_saving_percent {
        println!("energy saving     {p:.1}%");
    }
    for q in &report.query_results {
        println!(
            "{:<24} real {:>10.3}  noised {:>10.3}  (eps {}, sensitivity {})",
            q.query.to_string(),
            q.result.real_result,
            q.result.out_result,
            q.result.params.epsilon(),
            q.result.params.sensitivity()
        );
    }
    Ok(())
}

fn cmd_chart(a: &ChartArgs) -> Result<()> {
    let file = fs::File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(ioht_core::Error::InvalidValue("chart CSV needs an x column and at least one series".into()).into());
    }
    let mut series: Vec<Series> = headers.iter().skip(1).map(|h| Series::new(h, Vec::new())).collect();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let bad = |col: usize| ioht_core::Error::Parse {
            row: row + 2,
            message: format!("bad number in column {}", col + 1),
        };
        let x: f64 = record.get(0).unwrap_or("").trim().parse().map_err(|_| bad(0))?;
        for (col, s) in series.iter_mut().enumerate() {
            let cell = record.get(col + 1).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let y: f64 = cell.parse().map_err(|_| bad(col + 1))?;
            s.points.push((x, y));
        }
    }
    series.retain(|s| !s.points.is_empty());
    let style = match a.style {
        StyleArg::Line => ChartStyle::Line,
        StyleArg::Points => ChartStyle::Points,
    };
    let opts = ChartOptions {
        title: a.title.clone(),
        x_label: headers[0].to_string(),
        ..Default::default()
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let path = a.out.join(&a.name);
    render_chart(&series, style, &opts, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
