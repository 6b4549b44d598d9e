//! Newline-delimited JSON messages exchanged with an external detector worker
//! over its standard input and output.
//!
//! ```text
//! worker → {"type":"hello","version":1,"name":"<worker-name>"}
//! client → {"type":"hello","version":1}
//! client → {"type":"detect","id":7,"width":416,"height":416,"channels":1,"format":"png-base64","data":"..."}
//! worker → {"type":"detections","id":7,"detections":[{"x":..,"y":..,"w":..,"h":..,"score":..}]}
//! worker → {"type":"error","id":7,"message":"..."}
//! client → {"type":"shutdown"}
//! ```

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::raster::Image;

pub const PROTOCOL_VERSION: u32 = 1;
pub const PATCH_FORMAT: &str = "png-base64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireDetection {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

/// Messages sent by the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Hello {
        version: u32,
    },
    Detect {
        id: u64,
        width: u32,
        height: u32,
        channels: u8,
        format: String,
        data: String,
    },
    Shutdown,
}

/// Messages sent by the worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WorkerMessage {
    Hello {
        version: u32,
        #[serde(default)]
        name: String,
    },
    Detections {
        id: u64,
        detections: Vec<WireDetection>,
    },
    Error {
        #[serde(default)]
        id: Option<u64>,
        message: String,
    },
}

impl ClientMessage {
    pub fn detect(id: u64, patch: &Image) -> Result<Self, image::ImageError> {
        Ok(Self::Detect {
            id,
            width: patch.width(),
            height: patch.height(),
            channels: patch.channels(),
            format: PATCH_FORMAT.to_owned(),
            data: STANDARD.encode(patch.encode_png()?),
        })
    }

    /// Serializes to a single line, newline included.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("client messages always serialize");
        s.push('\n');
        s
    }
}

impl WorkerMessage {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("worker messages always serialize");
        s.push('\n');
        s
    }
}

/// Decodes the patch carried by a detect request.
pub fn decode_patch(format: &str, data: &str) -> Result<Image, String> {
    if format != PATCH_FORMAT {
        return Err(format!("unsupported patch format `{format}`"));
    }
    let bytes = STANDARD.decode(data).map_err(|e| format!("bad base64: {e}"))?;
    Image::decode_png(&bytes).map_err(|e| format!("bad png: {e}"))
}
