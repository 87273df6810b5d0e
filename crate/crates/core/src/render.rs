//! Render outputs, a small software rasterizer, and display sinks for the
//! `human` render mode.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

/// Row-major RGB frame, 8 bits per channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(height: usize, width: usize, fill: [u8; 3]) -> Self {
        Self {
            height,
            width,
            data: fill.repeat(height * width),
        }
    }

    /// `[height, width, 3]`
    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, 3]
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn put(&mut self, row: i64, col: i64, color: [u8; 3]) {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            return;
        }
        let i = (row as usize * self.width + col as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&color);
    }

    /// Fills the axis-aligned rectangle `[x0, x1) x [y0, y1)` in pixel coordinates.
    pub fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, color: [u8; 3]) {
        let (cx0, cx1) = (x0.min(x1).floor() as i64, x0.max(x1).ceil() as i64);
        let (cy0, cy1) = (y0.min(y1).floor() as i64, y0.max(y1).ceil() as i64);
        for row in cy0..cy1 {
            for col in cx0..cx1 {
                self.put(row, col, color);
            }
        }
    }

    pub fn fill_circle(&mut self, cx: f64, cy: f64, radius: f64, color: [u8; 3]) {
        let r2 = radius * radius;
        for row in (cy - radius).floor() as i64..=(cy + radius).ceil() as i64 {
            for col in (cx - radius).floor() as i64..=(cx + radius).ceil() as i64 {
                let (dx, dy) = (col as f64 + 0.5 - cx, row as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= r2 {
                    self.put(row, col, color);
                }
            }
        }
    }

    /// Draws a segment of the given thickness (a capsule).
    pub fn draw_line(&mut self, from: (f64, f64), to: (f64, f64), thickness: f64, color: [u8; 3]) {
        let half = thickness / 2.0;
        let (min_x, max_x) = (from.0.min(to.0) - half, from.0.max(to.0) + half);
        let (min_y, max_y) = (from.1.min(to.1) - half, from.1.max(to.1) + half);
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        let len2 = dx * dx + dy * dy;
        for row in min_y.floor() as i64..=max_y.ceil() as i64 {
            for col in min_x.floor() as i64..=max_x.ceil() as i64 {
                let (px, py) = (col as f64 + 0.5, row as f64 + 0.5);
                let t = if len2 > 0.0 {
                    (((px - from.0) * dx + (py - from.1) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (qx, qy) = (from.0 + t * dx - px, from.1 + t * dy - py);
                if qx * qx + qy * qy <= half * half {
                    self.put(row, col, color);
                }
            }
        }
    }

    /// Binary PPM (P6) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RenderOutput {
    Frame(Frame),
    Text(String),
}

impl RenderOutput {
    pub fn as_frame(&self) -> Option<&Frame> {
        match self {
            RenderOutput::Frame(f) => Some(f),
            RenderOutput::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            RenderOutput::Text(t) => Some(t),
            RenderOutput::Frame(_) => None,
        }
    }
}

/// Destination for frames produced in `human` mode.
pub trait FrameSink: Send {
    fn show(&mut self, output: &RenderOutput) -> io::Result<()>;
}

/// Writes text renders to standard output. Frames are summarized in one line.
#[derive(Debug, Default)]
pub struct TerminalSink;

impl FrameSink for TerminalSink {
    fn show(&mut self, output: &RenderOutput) -> io::Result<()> {
        let mut stdout = io::stdout().lock();
        match output {
            RenderOutput::Text(t) => writeln!(stdout, "{t}"),
            RenderOutput::Frame(f) => writeln!(stdout, "[frame {}x{}]", f.width(), f.height()),
        }
    }
}

/// Writes each frame as a numbered PPM file (text renders as `.txt`).
#[derive(Debug)]
pub struct FrameFileSink {
    dir: PathBuf,
    next_index: usize,
}

impl FrameFileSink {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            next_index: 0,
        }
    }

    /// Sink under the system temporary directory, unique per process.
    pub fn in_temp_dir() -> Self {
        Self::new(std::env::temp_dir().join(format!("gymkit-frames-{}", std::process::id())))
    }

    pub fn dir(&self) -> &PathBuf {
        &self.dir
    }
}

impl FrameSink for FrameFileSink {
    fn show(&mut self, output: &RenderOutput) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let (ext, bytes) = match output {
            RenderOutput::Frame(f) => ("ppm", f.to_ppm()),
            RenderOutput::Text(t) => ("txt", t.clone().into_bytes()),
        };
        let path = self.dir.join(format!("frame_{:06}.{ext}", self.next_index));
        self.next_index += 1;
        fs::write(path, bytes)
    }
}

/// Keeps every shown output in a shared buffer.
#[derive(Clone, Debug, Default)]
pub struct MemorySink {
    outputs: Arc<Mutex<Vec<RenderOutput>>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn outputs(&self) -> Vec<RenderOutput> {
        self.outputs.lock().expect("sink lock").clone()
    }
}

impl FrameSink for MemorySink {
    fn show(&mut self, output: &RenderOutput) -> io::Result<()> {
        self.outputs.lock().expect("sink lock").push(output.clone());
        Ok(())
    }
}

/// Paces `human` mode output at the environment's recommended frame rate.
pub struct HumanDisplay {
    sink: Box<dyn FrameSink>,
    frame_interval: Option<Duration>,
    last_shown: Option<Instant>,
}

impl HumanDisplay {
    pub fn new(sink: Box<dyn FrameSink>, render_fps: u32) -> Self {
        Self {
            sink,
            frame_interval: (render_fps > 0)
                .then(|| Duration::from_secs_f64(1.0 / render_fps as f64)),
            last_shown: None,
        }
    }

    /// Disables frame pacing; frames are pushed as fast as they are produced.
    pub fn unpaced(sink: Box<dyn FrameSink>) -> Self {
        Self {
            sink,
            frame_interval: None,
            last_shown: None,
        }
    }

    pub fn show(&mut self, output: &RenderOutput) -> io::Result<()> {
        if let (Some(interval), Some(last)) = (self.frame_interval, self.last_shown) {
            let elapsed = last.elapsed();
            if elapsed < interval {
                thread::sleep(interval - elapsed);
            }
        }
        self.last_shown = Some(Instant::now());
        self.sink.show(output)
    }
}

impl std::fmt::Debug for HumanDisplay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HumanDisplay")
            .field("frame_interval", &self.frame_interval)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitives_stay_in_bounds() {
        let mut f = Frame::new(10, 20, [255, 255, 255]);
        f.fill_rect(-5.0, -5.0, 3.0, 3.0, [0, 0, 0]);
        f.fill_circle(19.0, 9.0, 4.0, [1, 2, 3]);
        f.draw_line((0.0, 9.5), (25.0, 9.5), 1.0, [9, 9, 9]);
        assert_eq!(f.shape(), [10, 20, 3]);
        assert_eq!(f.pixel(0, 0), [0, 0, 0]);
        assert_eq!(f.pixel(9, 10), [9, 9, 9]);
        assert_eq!(f.pixel(5, 10), [255, 255, 255]);
    }

    #[test]
    fn ppm_header() {
        let f = Frame::new(2, 3, [1, 2, 3]);
        let ppm = f.to_ppm();
        assert!(ppm.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(ppm.len(), 11 + 18);
    }

    #[test]
    fn memory_sink_collects() {
        let sink = MemorySink::new();
        let mut display = HumanDisplay::unpaced(Box::new(sink.clone()));
        display.show(&RenderOutput::Text("a".into())).unwrap();
        display.show(&RenderOutput::Text("b".into())).unwrap();
        assert_eq!(sink.outputs().len(), 2);
    }

    #[test]
    fn pacing_spaces_frames() {
        let sink = MemorySink::new();
        let mut display = HumanDisplay::new(Box::new(sink), 50);
        let start = Instant::now();
        for _ in 0..3 {
            display.show(&RenderOutput::Text(String::new())).unwrap();
        }
        assert!(start.elapsed() >= Duration::from_millis(39));
    }
}
