export {
  PROTOCOL_VERSION,
  MAX_MESSAGE_BYTES,
  canonicalJson,
  encodeFrame,
  FrameDecoder,
  decodeServerMessage,
  helloMessage,
} from "./protocol.js";
export type {
  ClientMessage,
  CommandMessage,
  GazeMessage,
  GazeWireSample,
  HelloAckMessage,
  GazeAckMessage,
  CommandAckMessage,
  ErrorMessage,
  ServerMessage,
  SessionState,
  Telemetry,
  CandidateInfo,
  TickPayload,
  TickMessage,
} from "./protocol.js";

export { decodePlane, decodeMaskRle, nodeInflate } from "./planes.js";
export type { Inflate } from "./planes.js";

export { compositeTick, markerInfo, warmColor, coolColor, ALL_LAYERS } from "./overlays.js";
export type { TickView, LayerToggles, MarkerInfo, Composite } from "./overlays.js";

export { SessionCore } from "./session.js";
export type { ConnectionStatus, PendingCommand, SessionEvents } from "./session.js";

export { SessionClient, tcpConnector } from "./connection.js";
export type { Transport, TransportEvents, Connector, ClientOptions } from "./connection.js";

export { MouseGazeProvider, ScriptedGazeSource, GazePublisher } from "./gaze.js";
export type { GazeSource, PointerEventsLike } from "./gaze.js";

export { SeriesBuffer, PlotSet } from "./plots.js";

export { ControlPanel } from "./panel.js";
export type { ScenarioEndpoint, ClientFactory } from "./panel.js";
