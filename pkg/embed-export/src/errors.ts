/** Bad command-line invocation; exits 1. */
export class UsageError extends Error {}

/** Unreadable or malformed input corpus; exits 2. */
export class InputError extends Error {}

/** Encoder failed to load or emitted the wrong shape; exits 3. */
export class ModelError extends Error {}
