//! Wire format. One request per TCP connection.
//!
//! Request (5 bytes): `0x4D 0x44 | version 0x01 | op 0x01 (GET) | node_id`.
//! Response: `status u8 | length u32 BE | payload`. Status `0x00` carries the
//! node's symbols, `0x01` carries a UTF-8 error message.

use thiserror::Error;
use tokio::io::{AsyncRead, AsyncReadExt, AsyncWrite, AsyncWriteExt};

pub const MAGIC: [u8; 2] = [0x4D, 0x44];
pub const VERSION: u8 = 0x01;
pub const OP_GET: u8 = 0x01;
pub const REQUEST_LEN: usize = 5;

pub const STATUS_OK: u8 = 0x00;
pub const STATUS_ERROR: u8 = 0x01;

/// Upper bound on accepted payloads. A node never stores more than this.
pub const MAX_PAYLOAD: u32 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("bad magic {0:02x?}")]
    Magic([u8; 2]),
    #[error("unsupported version {0}")]
    Version(u8),
    #[error("unsupported op {0}")]
    Op(u8),
    #[error("payload length {0} exceeds limit")]
    TooLong(u32),
    #[error("unknown status byte {0}")]
    Status(u8),
}

pub fn encode_request(node_id: u8) -> [u8; REQUEST_LEN] {
    [MAGIC[0], MAGIC[1], VERSION, OP_GET, node_id]
}

/// Validate a request and return the node id it asks for.
pub fn parse_request(buf: &[u8; REQUEST_LEN]) -> Result<u8, ProtocolError> {
    if buf[..2] != MAGIC {
        return Err(ProtocolError::Magic([buf[0], buf[1]]));
    }
    if buf[2] != VERSION {
        return Err(ProtocolError::Version(buf[2]));
    }
    if buf[3] != OP_GET {
        return Err(ProtocolError::Op(buf[3]));
    }
    Ok(buf[4])
}

pub fn encode_response(status: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + payload.len());
    out.push(status);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Ok(Vec<u8>),
    Error(String),
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub async fn read_response<R: AsyncRead + Unpin>(r: &mut R) -> Result<Response, ReadError> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head).await?;
    let len = u32::from_be_bytes([head[1], head[2], head[3], head[4]]);
    if len > MAX_PAYLOAD {
        return Err(ProtocolError::TooLong(len).into());
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload).await?;
    match head[0] {
        STATUS_OK => Ok(Response::Ok(payload)),
        STATUS_ERROR => Ok(Response::Error(String::from_utf8_lossy(&payload).into_owned())),
        s => Err(ProtocolError::Status(s).into()),
    }
}

pub async fn write_response<W: AsyncWrite + Unpin>(w: &mut W, status: u8, payload: &[u8]) -> std::io::Result<()> {
    w.write_all(&encode_response(status, payload)).await?;
    w.flush().await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_bytes() {
        assert_eq!(encode_request(3), [0x4D, 0x44, 0x01, 0x01, 0x03]);
        assert_eq!(parse_request(&encode_request(200)), Ok(200));
        assert_eq!(parse_request(&[0x4D, 0x45, 1, 1, 1]), Err(ProtocolError::Magic([0x4D, 0x45])));
        assert_eq!(parse_request(&[0x4D, 0x44, 2, 1, 1]), Err(ProtocolError::Version(2)));
        assert_eq!(parse_request(&[0x4D, 0x44, 1, 9, 1]), Err(ProtocolError::Op(9)));
    }

    #[test]
    fn response_bytes() {
        assert_eq!(encode_response(STATUS_OK, &[0xAA, 0xBB]), vec![0, 0, 0, 0, 2, 0xAA, 0xBB]);
        assert_eq!(encode_response(STATUS_ERROR, b""), vec![1, 0, 0, 0, 0]);
    }

    #[tokio::test]
    async fn response_round_trip() {
        let bytes = encode_response(STATUS_OK, &[1, 2, 3]);
        assert_eq!(read_response(&mut &bytes[..]).await.unwrap(), Response::Ok(vec![1, 2, 3]));
        let bytes = encode_response(STATUS_ERROR, b"nope");
        assert_eq!(read_response(&mut &bytes[..]).await.unwrap(), Response::Error("nope".into()));
        let truncated = [0u8, 0, 0, 0, 4, 1];
        assert!(read_response(&mut &truncated[..]).await.is_err());
        let odd = [7u8, 0, 0, 0, 0];
        assert!(matches!(read_response(&mut &odd[..]).await, Err(ReadError::Protocol(ProtocolError::Status(7)))));
    }
}
