//! Line-delimited observation streams.
//!
//! The first line is a header record, every following non-empty line one
//! frame record; each line is a self-contained JSON object. Field names are
//! frozen in `docs/format.md`.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::observation::{
    DepthSource, Detection, FrameObservation, StreamHeader, POSE_CONVENTION, STREAM_VERSION,
};
use crate::geometry::{DepthImage, RigidTransform};
use crate::tracker::BoundingBox;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("stream line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("stream does not start with a header record")]
    MissingHeader,
    #[error("unsupported stream version {0}, expected {STREAM_VERSION}")]
    UnsupportedVersion(u32),
    #[error("pose convention mismatch: expected {POSE_CONVENTION:?}, got {got:?}")]
    PoseConventionMismatch { got: String },
    #[error("depth path {0:?} is not valid UTF-8")]
    NonUtf8DepthPath(PathBuf),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum StreamRecord {
    Header(StreamHeader),
    Frame(FrameRecord),
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    frame_id: u64,
    timestamp_s: f64,
    world_from_camera: RigidTransform,
    detections: Vec<DetectionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth_pgm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth_inline: Option<DepthImage>,
}

#[derive(Serialize, Deserialize)]
struct DetectionRecord {
    bbox_px: BoundingBox,
    confidence: f64,
}

pub struct StreamWriter<W: Write> {
    w: W,
}

impl<W: Write> StreamWriter<W> {
    pub fn new(mut w: W, header: &StreamHeader) -> Result<Self, StreamError> {
        let line = serde_json::to_string(&StreamRecord::Header(header.clone()))
            .expect("header serializes");
        writeln!(w, "{line}")?;
        Ok(Self { w })
    }

    pub fn write_frame(&mut self, obs: &FrameObservation) -> Result<(), StreamError> {
        let (depth_pgm, depth_inline) = match &obs.depth {
            DepthSource::Inline(d) => (None, Some(d.clone())),
            DepthSource::Path(p) => {
                let s = p
                    .to_str()
                    .ok_or_else(|| StreamError::NonUtf8DepthPath(p.clone()))?
                    .to_string();
                (Some(s), None)
            }
        };
        let record = StreamRecord::Frame(FrameRecord {
            frame_id: obs.frame_id,
            timestamp_s: obs.timestamp,
            world_from_camera: obs.world_from_camera,
            detections: obs
                .detections
                .iter()
                .map(|d| DetectionRecord { bbox_px: d.bbox, confidence: d.confidence })
                .collect(),
            depth_pgm,
            depth_inline,
        });
        let line = serde_json::to_string(&record).expect("frame serializes");
        writeln!(self.w, "{line}")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.w
    }
}

/// Reads the header eagerly, then frames on demand.
pub struct StreamReader<R: BufRead> {
    reader: R,
    header: StreamHeader,
    line: usize,
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(mut reader: R) -> Result<Self, StreamError> {
        let mut line = 0;
        let first = loop {
            let mut buf = String::new();
            if reader.read_line(&mut buf)? == 0 {
                return Err(StreamError::MissingHeader);
            }
            line += 1;
            if !buf.trim().is_empty() {
                break buf;
            }
        };
        let record: StreamRecord = parse_line(&first, line)?;
        let StreamRecord::Header(header) = record else {
            return Err(StreamError::MissingHeader);
        };
        if header.version != STREAM_VERSION {
            return Err(StreamError::UnsupportedVersion(header.version));
        }
        if header.pose_convention != POSE_CONVENTION {
            return Err(StreamError::PoseConventionMismatch { got: header.pose_convention });
        }
        Ok(Self { reader, header, line })
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    /// The next frame record, or `None` at end of stream.
    pub fn next_frame(&mut self) -> Option<Result<FrameObservation, StreamError>> {
        loop {
            let mut buf = String::new();
            match self.reader.read_line(&mut buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            if buf.trim().is_empty() {
                continue;
            }
            return Some(self.parse_frame(&buf));
        }
    }

    fn parse_frame(&self, raw: &str) -> Result<FrameObservation, StreamError> {
        let line = self.line;
        let record: StreamRecord = parse_line(raw, line)?;
        let StreamRecord::Frame(frame) = record else {
            return Err(StreamError::Malformed {
                line,
                message: "unexpected second header record".into(),
            });
        };
        let malformed = |message: String| StreamError::Malformed { line, message };
        for d in &frame.detections {
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(malformed(format!(
                    "confidence {} outside [0, 1] in frame {}",
                    d.confidence, frame.frame_id
                )));
            }
        }
        if !frame.timestamp_s.is_finite() {
            return Err(malformed(format!("non-finite timestamp in frame {}", frame.frame_id)));
        }
        let depth = match (frame.depth_pgm, frame.depth_inline) {
            (Some(p), None) => DepthSource::Path(PathBuf::from(p)),
            (None, Some(d)) => DepthSource::Inline(d),
            (None, None) => {
                return Err(malformed(format!("frame {} has no depth source", frame.frame_id)))
            }
            (Some(_), Some(_)) => {
                return Err(malformed(format!(
                    "frame {} has both depth_pgm and depth_inline",
                    frame.frame_id
                )))
            }
        };
        Ok(FrameObservation {
            frame_id: frame.frame_id,
            timestamp: frame.timestamp_s,
            world_from_camera: frame.world_from_camera,
            detections: frame
                .detections
                .into_iter()
                .map(|d| Detection { bbox: d.bbox_px, confidence: d.confidence })
                .collect(),
            depth,
        })
    }
}

fn parse_line(raw: &str, line: usize) -> Result<StreamRecord, StreamError> {
    serde_json::from_str(raw).map_err(|e| StreamError::Malformed { line, message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraIntrinsics, Pixel};

    fn header() -> StreamHeader {
        let k = CameraIntrinsics::new(130.0, 130.0, 79.5, 59.5, 160, 120).unwrap();
        StreamHeader::new(k, k, RigidTransform::from_translation(0.025, 0.0, 0.0))
    }

    fn frame(id: u64) -> FrameObservation {
        FrameObservation {
            frame_id: id,
            timestamp: id as f64 / 15.0,
            world_from_camera: RigidTransform::from_translation(0.1 * id as f64, 2.0, 1.2),
            detections: vec![Detection {
                bbox: BoundingBox::new(10.0, 20.0, 30.0, 50.0).unwrap(),
                confidence: 0.9,
            }],
            depth: DepthSource::Path(PathBuf::from(format!("depth/{id:06}.pgm"))),
        }
    }

    #[test]
    fn roundtrip_header_and_frames() {
        let mut buf = Vec::new();
        let mut w = StreamWriter::new(&mut buf, &header()).unwrap();
        w.write_frame(&frame(0)).unwrap();
        w.write_frame(&frame(1)).unwrap();

        let mut r = StreamReader::new(buf.as_slice()).unwrap();
        assert_eq!(r.header(), &header());
        let f0 = r.next_frame().unwrap().unwrap();
        assert_eq!(f0, frame(0));
        let f1 = r.next_frame().unwrap().unwrap();
        assert_eq!(f1.frame_id, 1);
        assert!(r.next_frame().is_none());
    }

    #[test]
    fn inline_depth_roundtrips_exactly() {
        let mut img = DepthImage::empty(4, 3);
        img.set(1, 2, 1.23456789);
        let obs = FrameObservation { depth: DepthSource::Inline(img.clone()), ..frame(0) };
        let mut buf = Vec::new();
        let mut w = StreamWriter::new(&mut buf, &header()).unwrap();
        w.write_frame(&obs).unwrap();
        let mut r = StreamReader::new(buf.as_slice()).unwrap();
        let got = r.next_frame().unwrap().unwrap();
        assert_eq!(got.depth, DepthSource::Inline(img));
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let mut buf = Vec::new();
        let mut w = StreamWriter::new(&mut buf, &header()).unwrap();
        w.write_frame(&frame(0)).unwrap();
        buf.extend_from_slice(b"{ not json\n");
        let mut r = StreamReader::new(buf.as_slice()).unwrap();
        r.next_frame().unwrap().unwrap();
        match r.next_frame().unwrap() {
            Err(StreamError::Malformed { line: 3, .. }) => {}
            other => panic!("expected malformed line 3, got {other:?}"),
        }
    }

    #[test]
    fn header_validation() {
        assert!(matches!(
            StreamReader::new(&b""[..]),
            Err(StreamError::MissingHeader)
        ));
        let mut h = header();
        h.version = 9;
        let mut buf = Vec::new();
        StreamWriter::new(&mut buf, &h).unwrap();
        assert!(matches!(
            StreamReader::new(buf.as_slice()),
            Err(StreamError::UnsupportedVersion(9))
        ));
        let mut h = header();
        h.pose_convention = "camera_from_world".into();
        let mut buf = Vec::new();
        StreamWriter::new(&mut buf, &h).unwrap();
        assert!(matches!(
            StreamReader::new(buf.as_slice()),
            Err(StreamError::PoseConventionMismatch { .. })
        ));
    }

    #[test]
    fn bad_confidence_and_bad_bbox_rejected() {
        let mut buf = Vec::new();
        let mut w = StreamWriter::new(&mut buf, &header()).unwrap();
        let mut bad = frame(0);
        bad.detections[0].confidence = 1.5;
        w.write_frame(&bad).unwrap();
        let mut r = StreamReader::new(buf.as_slice()).unwrap();
        assert!(matches!(
            r.next_frame().unwrap(),
            Err(StreamError::Malformed { line: 2, .. })
        ));

        // A degenerate bbox fails at deserialization.
        let mut buf = Vec::new();
        StreamWriter::new(&mut buf, &header()).unwrap();
        buf.extend_from_slice(
            br#"{"record":"frame","frame_id":0,"timestamp_s":0.0,"world_from_camera":{"rotation_wxyz":[1,0,0,0],"translation_m":[0,0,0]},"detections":[{"bbox_px":[10,10,5,20],"confidence":0.5}],"depth_pgm":"d.pgm"}"#,
        );
        buf.push(b'\n');
        let mut r = StreamReader::new(buf.as_slice()).unwrap();
        assert!(matches!(
            r.next_frame().unwrap(),
            Err(StreamError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn missing_depth_source_rejected() {
        let mut buf = Vec::new();
        StreamWriter::new(&mut buf, &header()).unwrap();
        buf.extend_from_slice(
            br#"{"record":"frame","frame_id":0,"timestamp_s":0.0,"world_from_camera":{"rotation_wxyz":[1,0,0,0],"translation_m":[0,0,0]},"detections":[]}"#,
        );
        buf.push(b'\n');
        let mut r = StreamReader::new(buf.as_slice()).unwrap();
        let err = r.next_frame().unwrap().unwrap_err();
        assert!(err.to_string().contains("no depth source"), "{err}");
    }

    #[test]
    fn centroid_of_wire_bbox() {
        let b: BoundingBox = serde_json::from_str("[100.0,200.0,140.0,260.0]").unwrap();
        assert_eq!(b.centroid(), Pixel::new(120.0, 230.0));
    }
}
