export * from "./model.js";
export * from "./trace.js";
export * from "./anim.js";
export * from "./session.js";
export * from "./tcpClient.js";
export * from "./render/graph.js";
export * from "./render/solids.js";
