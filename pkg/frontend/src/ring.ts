/** Fixed-capacity ring buffer; old entries fall off the front. */
export class RingBuffer<T> {
  private items: T[] = [];
  private start = 0;

  constructor(readonly capacity: number) {
    if (!Number.isInteger(capacity) || capacity < 1) {
      throw new RangeError(`capacity must be a positive integer, got ${capacity}`);
    }
  }

  get length(): number {
    return this.items.length - this.start;
  }

  push(item: T): void {
    this.items.push(item);
    if (this.length > this.capacity) {
      this.start += 1;
      // Compact occasionally so memory stays bounded by the capacity.
      if (this.start > this.capacity) {
        this.items = this.items.slice(this.start);
        this.start = 0;
      }
    }
  }

  clear(): void {
    this.items = [];
    this.start = 0;
  }

  at(i: number): T | undefined {
    return i >= 0 && i < this.length ? this.items[this.start + i] : undefined;
  }

  last(): T | undefined {
    return this.length > 0 ? this.items[this.items.length - 1] : undefined;
  }

  toArray(): T[] {
    return this.items.slice(this.start);
  }
}
