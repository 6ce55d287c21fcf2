"""Newline-delimited line transport over loopback queues, TCP sockets and serial ports."""
import logging
import queue
import re
import select
import socket
import threading
import time
from collections import deque
from dataclasses import dataclass

import serial

from mirto.config import SerialSettings, get_serial_settings
from mirto.errors import ConnectionClosed, FramingError, OpenError, UsageError

logger = logging.getLogger(__name__)

MAX_LINE_BYTES = 4096
SERIAL_POLL_SECONDS = 0.01
KINDS = ("loopback", "tcp", "serial")

_TCP_ADDRESS = re.compile(r"^(?:tcp:)?(?P<host>[A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\]):(?P<port>[0-9]{1,5})$")


@dataclass(frozen=True)
class TransportEndpoint:
    kind: str
    address: str = ""
    read_timeout_ms: int = 1000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown transport kind {self.kind!r}")
        if self.read_timeout_ms <= 0:
            raise UsageError("read timeout must be positive")
        if self.kind == "tcp":
            self.host_port()
        if self.kind == "serial" and not self.address:
            raise UsageError("serial endpoint needs a device path")

    @classmethod
    def parse(cls, text: str, read_timeout_ms: int = 1000) -> "TransportEndpoint":
        """`loopback`, `tcp:host:port` / `host:port`, anything else is a serial device or URL."""
        text = text.strip()
        if text == "loopback":
            return cls("loopback", "", read_timeout_ms)
        if _TCP_ADDRESS.match(text):
            return cls("tcp", text.removeprefix("tcp:"), read_timeout_ms)
        if text.startswith("tcp:"):
            raise UsageError(f"malformed tcp endpoint {text!r}, expected tcp:host:port")
        return cls("serial", text, read_timeout_ms)

    def host_port(self) -> tuple[str, int]:
        match = _TCP_ADDRESS.match(self.address)
        if not match:
            raise UsageError(f"malformed tcp address {self.address!r}, expected host:port")
        port = int(match["port"])
        if port > 65535:
            raise UsageError(f"tcp port out of range: {port}")
        return match["host"].strip("[]"), port


# ---------------------------------------------------------------------------
# Framing shared by every kind of connection
# ---------------------------------------------------------------------------
class Connection:
    """One reader and one writer may use a connection concurrently."""

    def __init__(self, name: str, read_timeout_ms: int = 1000):
        self.name = name
        self.read_timeout_ms = read_timeout_ms
        self._buffer = bytearray()
        self._lines: deque[str] = deque()
        self._discarding = False
        self._eof = False
        self._closed = False
        self._write_lock = threading.Lock()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    @property
    def closed(self) -> bool:
        return self._closed

    def send_line(self, line: str) -> None:
        if "\n" in line:
            raise UsageError("line must not contain a newline")
        try:
            data = (line + "\n").encode("ascii")
        except UnicodeEncodeError:
            raise UsageError(f"line is not ASCII: {line!r}") from None
        self.send_bytes(data)

    def send_bytes(self, data: bytes) -> None:
        with self._write_lock:
            if self._closed:
                raise ConnectionClosed(f"{self.name}: send on closed connection")
            self._write(data)

    def recv_line(self, timeout_ms: int | None = None) -> str | None:
        """Next complete line without its terminator, or None when the timeout expires."""
        if self._closed:
            raise ConnectionClosed(f"{self.name}: receive on closed connection")
        timeout = self.read_timeout_ms if timeout_ms is None else timeout_ms
        deadline = time.monotonic() + max(0, timeout) / 1000
        while True:
            if self._lines:
                return self._lines.popleft()
            if self._eof:
                raise ConnectionClosed(f"{self.name}: peer closed the connection")
            chunk = self._read(max(0.0, deadline - time.monotonic()))
            if chunk is None:
                self._eof = True
            elif chunk:
                self._feed(chunk)
            elif time.monotonic() >= deadline:
                return None

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._shutdown()
        finally:
            logger.debug("%s closed", self.name)

    def _feed(self, chunk: bytes) -> None:
        self._buffer.extend(chunk)
        overlong = 0
        while True:
            newline = self._buffer.find(b"\n")
            if newline < 0:
                break
            raw = bytes(self._buffer[:newline])
            del self._buffer[: newline + 1]
            if self._discarding:
                self._discarding = False
                continue
            if len(raw) > MAX_LINE_BYTES:
                overlong = len(raw)
                continue
            self._lines.append(raw.decode("latin-1"))
        if overlong:
            raise FramingError(f"{self.name}: line of {overlong} bytes exceeds {MAX_LINE_BYTES}")
        if len(self._buffer) > MAX_LINE_BYTES:
            size = len(self._buffer)
            self._buffer.clear()
            self._discarding = True
            raise FramingError(f"{self.name}: unterminated line exceeds {MAX_LINE_BYTES} bytes ({size})")

    # subclasses move the bytes
    def _write(self, data: bytes) -> None:
        raise NotImplementedError

    def _read(self, timeout: float) -> bytes | None:
        """Some bytes, b"" on timeout, None at end of stream."""
        raise NotImplementedError

    def _shutdown(self) -> None:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Loopback
# ---------------------------------------------------------------------------
class _Channel:
    def __init__(self):
        self.chunks: queue.Queue[bytes | None] = queue.Queue()
        self.reader_gone = False


class LoopbackConnection(Connection):
    def __init__(self, name: str, inbox: _Channel, outbox: _Channel, read_timeout_ms: int = 1000):
        super().__init__(name, read_timeout_ms)
        self._inbox = inbox
        self._outbox = outbox

    def _write(self, data: bytes) -> None:
        if self._outbox.reader_gone:
            raise ConnectionClosed(f"{self.name}: peer closed the connection")
        self._outbox.chunks.put(data)

    def _read(self, timeout: float) -> bytes | None:
        try:
            if timeout <= 0:
                return self._inbox.chunks.get_nowait()
            return self._inbox.chunks.get(timeout=timeout)
        except queue.Empty:
            return b""

    def _shutdown(self) -> None:
        self._inbox.reader_gone = True
        self._outbox.chunks.put(None)


def loopback_pair(read_timeout_ms: int = 1000) -> tuple[LoopbackConnection, LoopbackConnection]:
    """(client side, device side), FIFO and lossless in both directions."""
    up, down = _Channel(), _Channel()
    client = LoopbackConnection("loopback-client", inbox=down, outbox=up, read_timeout_ms=read_timeout_ms)
    device = LoopbackConnection("loopback-device", inbox=up, outbox=down, read_timeout_ms=read_timeout_ms)
    return client, device


# ---------------------------------------------------------------------------
# TCP
# ---------------------------------------------------------------------------
class TcpConnection(Connection):
    def __init__(self, sock: socket.socket, name: str, read_timeout_ms: int = 1000):
        super().__init__(name, read_timeout_ms)
        sock.settimeout(None)
        self._sock = sock

    def _write(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as e:
            raise ConnectionClosed(f"{self.name}: {e}") from e

    def _read(self, timeout: float) -> bytes | None:
        try:
            ready, _, _ = select.select([self._sock], [], [], timeout)
            if not ready:
                return b""
            data = self._sock.recv(4096)
        except (OSError, ValueError) as e:
            raise ConnectionClosed(f"{self.name}: {e}") from e
        return data or None

    def _shutdown(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class Listener:
    """Device side of a tcp endpoint; accepts one client at a time."""

    def __init__(self, endpoint: TransportEndpoint):
        host, port = endpoint.host_port()
        self.endpoint = endpoint
        try:
            self._sock = socket.create_server((host, port))
        except OSError as e:
            raise OpenError(f"cannot listen on {host}:{port}: {e}") from e
        self.address = self._sock.getsockname()[:2]
        logger.info("listening on %s:%s", *self.address)

    def accept(self, timeout_ms: int | None = None) -> TcpConnection:
        self._sock.settimeout(None if timeout_ms is None else timeout_ms / 1000)
        try:
            sock, peer = self._sock.accept()
        except TimeoutError as e:
            raise OpenError(f"no client connected to {self.address[0]}:{self.address[1]}") from e
        logger.info("client connected from %s:%s", *peer[:2])
        return TcpConnection(sock, f"tcp-device:{peer[0]}:{peer[1]}", self.endpoint.read_timeout_ms)

    def close(self) -> None:
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


def listen(endpoint: TransportEndpoint) -> Listener:
    if endpoint.kind != "tcp":
        raise UsageError(f"cannot listen on a {endpoint.kind} endpoint")
    return Listener(endpoint)


# ---------------------------------------------------------------------------
# Serial (pyserial)
# ---------------------------------------------------------------------------
class SerialConnection(Connection):
    def __init__(self, port: serial.SerialBase, name: str, read_timeout_ms: int = 1000):
        super().__init__(name, read_timeout_ms)
        self._port = port
        # the port timeout stays at one poll slice; recv_line owns the deadline
        if port.timeout != SERIAL_POLL_SECONDS:
            port.timeout = SERIAL_POLL_SECONDS

    def _write(self, data: bytes) -> None:
        try:
            self._port.write(data)
            self._port.flush()
        except (serial.SerialException, OSError) as e:
            raise ConnectionClosed(f"{self.name}: {e}") from e

    def _read(self, timeout: float) -> bytes | None:
        try:
            waiting = self._port.in_waiting
            if waiting:
                return self._port.read(waiting)
            if timeout <= 0:
                return b""
            return self._port.read(1)
        except (serial.SerialException, OSError) as e:
            raise ConnectionClosed(f"{self.name}: {e}") from e

    def _shutdown(self) -> None:
        self._port.close()


def open_serial(address: str, settings: SerialSettings | None = None, read_timeout_ms: int = 1000) -> SerialConnection:
    settings = settings or get_serial_settings()
    try:
        port = serial.serial_for_url(
            address,
            baudrate=settings.baudrate,
            bytesize=settings.bytesize,
            parity=settings.parity,
            stopbits=settings.stopbits,
            xonxoff=settings.xonxoff,
            rtscts=settings.rtscts,
            timeout=SERIAL_POLL_SECONDS,
        )
    except (serial.SerialException, OSError, ValueError) as e:
        raise OpenError(f"cannot open serial device {address!r}: {e}") from e
    logger.info("opened serial %s at %d baud", address, settings.baudrate)
    return SerialConnection(port, f"serial:{address}", read_timeout_ms)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
def open_connection(endpoint: TransportEndpoint) -> Connection:
    if endpoint.kind == "loopback":
        raise UsageError("loopback connections come in pairs, use loopback_pair()")
    if endpoint.kind == "tcp":
        host, port = endpoint.host_port()
        try:
            sock = socket.create_connection((host, port), timeout=endpoint.read_timeout_ms / 1000)
        except OSError as e:
            raise OpenError(f"cannot connect to {host}:{port}: {e}") from e
        logger.info("connected to %s:%d", host, port)
        return TcpConnection(sock, f"tcp:{host}:{port}", endpoint.read_timeout_ms)
    return open_serial(endpoint.address, read_timeout_ms=endpoint.read_timeout_ms)
