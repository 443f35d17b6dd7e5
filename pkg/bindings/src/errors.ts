/** Error raised on the native side, rethrown here with its type preserved. */
export class NativeError extends Error {
  readonly nativeType: string;

  constructor(nativeType: string, message: string) {
    super(message);
    this.name = `NativeError(${nativeType})`;
    this.nativeType = nativeType;
  }
}

/** Bridge transport failure: the native process died or spoke garbage. */
export class BridgeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BridgeError";
  }
}
