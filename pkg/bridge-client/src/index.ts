export * from "./protocol.js";
export * from "./session.js";
export * from "./env.js";
export * from "./policy.js";
export { smokeTrain } from "./train.js";
