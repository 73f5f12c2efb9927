//! Dataset loaders and the canonical CSV writer.
//!
//! Canonical CSV is the interchange format: a `traj_id,label,t,x,y` header and
//! one row per waypoint, rows of one trajectory contiguous and time-ordered,
//! `t` empty when absent. Raw logs (Geolife PLT, T-drive, UCI GPS trajectories)
//! are read into the same model with `x` = longitude and `y` = latitude, in
//! degrees.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{Dataset, Label, LabeledTrajectory, Trajectory, Waypoint};
use crate::error::{Error, Result};

pub const CANONICAL_HEADER: [&str; 5] = ["traj_id", "label", "t", "x", "y"];

/// PLT files start with six header lines.
const PLT_HEADER_LINES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    CanonicalCsv,
    /// A single `.plt` file or a directory searched recursively for them.
    GeolifePlt,
    /// A single taxi file or a directory of them.
    TdriveTxt,
    /// Geolife user directories with `labels.txt`; one trajectory per labeled interval.
    GeolifeLabeled,
    /// UCI "GPS Trajectories" directory (`go_track_tracks.csv` + `go_track_trackspoints.csv`).
    UciGoTrack,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::invalid("format", format!("unknown dataset format `{s}`")))
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Label assigned to every trajectory by formats that carry no labels.
    pub label: Label,
}

pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset> {
    load_dataset_with(path, format, &LoadOptions::default())
}

pub fn load_dataset_with(path: &Path, format: Format, opts: &LoadOptions) -> Result<Dataset> {
    let ds = match format {
        Format::CanonicalCsv => read_canonical_csv(path)?,
        Format::GeolifePlt => {
            let items = load_each(path, "plt", |p, rel| {
                Ok(LabeledTrajectory::new(read_plt(p, rel)?, opts.label))
            })?;
            Dataset::new(dataset_name(path), items)?
        }
        Format::TdriveTxt => {
            let items = load_each(path, "txt", |p, rel| {
                Ok(LabeledTrajectory::new(read_tdrive(p, rel)?, opts.label))
            })?;
            Dataset::new(dataset_name(path), items)?
        }
        Format::GeolifeLabeled => read_geolife_labeled(path)?,
        Format::UciGoTrack => read_uci_go_track(path)?,
    };
    if ds.is_empty() {
        return Err(Error::EmptyInput(path.to_owned()));
    }
    Ok(ds)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(f)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad {field} `{s}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite {field}")));
    }
    Ok(v)
}

fn parse_datetime(path: &Path, line: usize, s: &str) -> Result<f64> {
    let s = s.trim().trim_matches('"');
    let dt = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y/%m/%d %H:%M:%S"))
        .map_err(|_| parse_err(path, line, format!("bad datetime `{s}`")))?;
    Ok(dt.and_utc().timestamp() as f64)
}

/// Files with extension `ext` below `root` (or `root` itself), sorted by path.
fn collect_files(root: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if root.is_file() {
        return Ok(vec![root.to_owned()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let p = entry.map_err(|e| Error::io(&dir, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case(ext))
            {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn relative_id(root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).unwrap_or(file);
    let rel = if rel.as_os_str().is_empty() { file } else { rel };
    let stem = rel.with_extension("");
    let s = stem
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/");
    if s.is_empty() {
        dataset_name(file)
    } else {
        s
    }
}

fn load_each(
    root: &Path,
    ext: &str,
    mut read: impl FnMut(&Path, String) -> Result<LabeledTrajectory>,
) -> Result<Vec<LabeledTrajectory>> {
    let files = collect_files(root, ext)?;
    let mut items = Vec::with_capacity(files.len());
    for f in files {
        let id = if root.is_file() {
            dataset_name(&f)
        } else {
            relative_id(root, &f)
        };
        items.push(read(&f, id)?);
    }
    Ok(items)
}

/// Raw logs are not guaranteed to be time-ordered; sort stably by timestamp.
fn ordered(id: String, mut pts: Vec<Waypoint>, path: &Path) -> Result<Trajectory> {
    if pts.is_empty() {
        return Err(Error::EmptyInput(path.to_owned()));
    }
    pts.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("timestamps are finite"));
    Trajectory::new(id, pts)
}

fn plt_record(path: &Path, line_no: usize, line: &str) -> Result<Waypoint> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() < 7 {
        return Err(parse_err(
            path,
            line_no,
            format!("expected 7 fields, found {}", f.len()),
        ));
    }
    let lat = parse_f64(path, line_no, "latitude", f[0])?;
    let lon = parse_f64(path, line_no, "longitude", f[1])?;
    let t = parse_datetime(path, line_no, &format!("{} {}", f[5].trim(), f[6].trim()))?;
    Ok(Waypoint::timed(t, lon, lat))
}

fn read_plt_points(path: &Path) -> Result<Vec<Waypoint>> {
    let lines = read_lines(path)?;
    let mut pts = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(PLT_HEADER_LINES) {
        if line.trim().is_empty() {
            continue;
        }
        pts.push(plt_record(path, i + 1, line)?);
    }
    Ok(pts)
}

fn read_plt(path: &Path, id: String) -> Result<Trajectory> {
    ordered(id, read_plt_points(path)?, path)
}

fn read_tdrive(path: &Path, fallback_id: String) -> Result<Trajectory> {
    let lines = read_lines(path)?;
    let mut pts = Vec::new();
    let mut taxi: Option<String> = None;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(path, n, format!("expected 4 fields, found {}", f.len())));
        }
        let t = parse_datetime(path, n, f[1])?;
        let lon = parse_f64(path, n, "longitude", f[2])?;
        let lat = parse_f64(path, n, "latitude", f[3])?;
        taxi.get_or_insert_with(|| f[0].trim().to_owned());
        pts.push(Waypoint::timed(t, lon, lat));
    }
    let id = taxi.filter(|s| !s.is_empty()).unwrap_or(fallback_id);
    ordered(id, pts, path)
}

/// Geolife transportation-mode ids used by [`Format::GeolifeLabeled`].
pub const TRANSPORT_MODES: [&str; 12] = [
    "walk", "bike", "bus", "car", "taxi", "subway", "train", "railway", "airplane", "motorcycle",
    "run", "boat",
];

pub fn transport_mode_id(name: &str) -> Option<Label> {
    TRANSPORT_MODES
        .iter()
        .position(|m| m.eq_ignore_ascii_case(name.trim()))
        .map(|i| i as Label)
}

fn read_geolife_labeled(root: &Path) -> Result<Dataset> {
    let mut label_files: Vec<PathBuf> = collect_files(root, "txt")?
        .into_iter()
        .filter(|p| p.file_name().is_some_and(|n| n == "labels.txt"))
        .collect();
    label_files.sort();
    let mut items = Vec::new();
    for lf in label_files {
        let user_dir = lf.parent().expect("labels.txt has a parent");
        let user = user_dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut pts = Vec::new();
        for plt in collect_files(&user_dir.join("Trajectory"), "plt")? {
            pts.extend(read_plt_points(&plt)?);
        }
        pts.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("timestamps are finite"));
        let times: Vec<f64> = pts.iter().map(|p| p.t.expect("PLT points are timed")).collect();

        for (i, line) in read_lines(&lf)?.iter().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let n = i + 1;
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(parse_err(&lf, n, format!("expected 3 tab-separated fields, found {}", f.len())));
            }
            let start = parse_datetime(&lf, n, f[0])?;
            let end = parse_datetime(&lf, n, f[1])?;
            let Some(label) = transport_mode_id(f[2]) else {
                return Err(parse_err(&lf, n, format!("unknown transportation mode `{}`", f[2].trim())));
            };
            let lo = times.partition_point(|&t| t < start);
            let hi = times.partition_point(|&t| t <= end);
            if lo >= hi {
                continue;
            }
            let id = format!("{user}/{}", start as i64);
            items.push(LabeledTrajectory::new(Trajectory::new(id, pts[lo..hi].to_vec())?, label));
        }
    }
    let labels = (0..TRANSPORT_MODES.len() as Label)
        .filter(|l| items.iter().any(|it: &LabeledTrajectory| it.label == *l))
        .collect();
    Dataset::with_labels(dataset_name(root), labels, items)
}

fn read_uci_go_track(dir: &Path) -> Result<Dataset> {
    let tracks_path = dir.join("go_track_tracks.csv");
    let points_path = dir.join("go_track_trackspoints.csv");

    let mut labels_by_track: BTreeMap<String, Label> = BTreeMap::new();
    let mut rdr = csv_reader(&tracks_path)?;
    let header = rdr.headers().map_err(|e| csv_err(&tracks_path, e))?.clone();
    let id_col = column(&header, "id", &tracks_path)?;
    let label_col = column(&header, "car_or_bus", &tracks_path)?;
    for (i, rec) in rdr.records().enumerate() {
        let n = i + 2;
        let rec = rec.map_err(|e| csv_err(&tracks_path, e))?;
        let label: Label = rec[label_col]
            .trim()
            .parse()
            .map_err(|_| parse_err(&tracks_path, n, format!("bad car_or_bus `{}`", &rec[label_col])))?;
        labels_by_track.insert(rec[id_col].trim().to_owned(), label);
    }

    let mut pts: HashMap<String, Vec<Waypoint>> = HashMap::new();
    let mut rdr = csv_reader(&points_path)?;
    let header = rdr.headers().map_err(|e| csv_err(&points_path, e))?.clone();
    let lat_col = column(&header, "latitude", &points_path)?;
    let lon_col = column(&header, "longitude", &points_path)?;
    let track_col = column(&header, "track_id", &points_path)?;
    let time_col = column(&header, "time", &points_path)?;
    for (i, rec) in rdr.records().enumerate() {
        let n = i + 2;
        let rec = rec.map_err(|e| csv_err(&points_path, e))?;
        let lat = parse_f64(&points_path, n, "latitude", &rec[lat_col])?;
        let lon = parse_f64(&points_path, n, "longitude", &rec[lon_col])?;
        let t = parse_datetime(&points_path, n, &rec[time_col])?;
        pts.entry(rec[track_col].trim().to_owned())
            .or_default()
            .push(Waypoint::timed(t, lon, lat));
    }

    let mut items = Vec::new();
    for (id, label) in labels_by_track {
        if let Some(p) = pts.remove(&id) {
            items.push(LabeledTrajectory::new(ordered(id, p, &points_path)?, label));
        }
    }
    Dataset::new("car-bus", items)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    parse_err(path, line, e.to_string())
}

fn column(header: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h.trim_matches('"') == name)
        .ok_or_else(|| parse_err(path, 1, format!("missing column `{name}`")))
}

fn read_canonical_csv(path: &Path) -> Result<Dataset> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(f);
    let mut records = rdr.records();

    match records.next() {
        None => return Err(Error::EmptyInput(path.to_owned())),
        Some(h) => {
            let h = h.map_err(|e| csv_err(path, e))?;
            if h.iter().ne(CANONICAL_HEADER) {
                return Err(parse_err(path, 1, format!("expected header `{}`", CANONICAL_HEADER.join(","))));
            }
        }
    }

    let mut items: Vec<LabeledTrajectory> = Vec::new();
    let mut current: Option<(String, Label, usize, Vec<Waypoint>)> = None;
    let mut finished: std::collections::HashSet<String> = Default::default();

    let finish = |cur: (String, Label, usize, Vec<Waypoint>),
                  items: &mut Vec<LabeledTrajectory>,
                  finished: &mut std::collections::HashSet<String>|
     -> Result<()> {
        let (id, label, first_line, pts) = cur;
        let traj = Trajectory::new(id.clone(), pts)
            .map_err(|e| parse_err(path, first_line, e.to_string()))?;
        finished.insert(id);
        items.push(LabeledTrajectory::new(traj, label));
        Ok(())
    };

    for (i, rec) in records.enumerate() {
        let n = i + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != 5 {
            return Err(parse_err(path, n, format!("expected 5 fields, found {}", rec.len())));
        }
        let id = &rec[0];
        let label: Label = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, n, format!("bad label `{}`", &rec[1])))?;
        let t = if rec[2].trim().is_empty() {
            None
        } else {
            Some(parse_f64(path, n, "t", &rec[2])?)
        };
        let wp = Waypoint {
            t,
            x: parse_f64(path, n, "x", &rec[3])?,
            y: parse_f64(path, n, "y", &rec[4])?,
        };
        match &mut current {
            Some((cid, clabel, _, pts)) if cid == id => {
                if *clabel != label {
                    return Err(parse_err(path, n, format!("label changes within trajectory {id}")));
                }
                pts.push(wp);
            }
            _ => {
                if let Some(done) = current.take() {
                    finish(done, &mut items, &mut finished)?;
                }
                if finished.contains(id) {
                    return Err(parse_err(path, n, format!("rows of trajectory {id} are not contiguous")));
                }
                current = Some((id.to_owned(), label, n, vec![wp]));
            }
        }
    }
    if let Some(done) = current.take() {
        finish(done, &mut items, &mut finished)?;
    }
    Dataset::new(dataset_name(path), items)
}

fn fmt_opt(t: Option<f64>) -> String {
    t.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_canonical_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::io("<canonical csv>", std::io::Error::other(e));
    w.write_record(CANONICAL_HEADER).map_err(io)?;
    for it in ds.items() {
        let label = it.label.to_string();
        for p in it.trajectory.points() {
            w.write_record([
                it.trajectory.id(),
                &label,
                &fmt_opt(p.t),
                &p.x.to_string(),
                &p.y.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::io("<canonical csv>", e))?;
    Ok(())
}

pub fn save_canonical_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_canonical_csv(ds, std::io::BufWriter::new(f))
}

/// Convert `input` to canonical CSV at `output`; returns the number of trajectories written.
///
/// An input directory without matching files yields an empty (header-only) file.
pub fn convert(input: &Path, format: Format, output: &Path, opts: &LoadOptions) -> Result<usize> {
    let ds = match load_dataset_with(input, format, opts) {
        Ok(ds) => ds,
        Err(Error::EmptyInput(p)) if input.is_dir() => {
            log::warn!("{}: no trajectories found", p.display());
            Dataset::new(dataset_name(input), Vec::new())?
        }
        Err(e) => return Err(e),
    };
    save_canonical_csv(&ds, output)?;
    Ok(ds.len())
}
