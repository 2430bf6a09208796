// API base resolution: config.js may set window.API_BASE; a value typed into
// the settings box wins and is remembered locally.

declare global {
  interface Window {
    API_BASE?: string;
  }
}

const STORAGE_KEY = "classrecap.apiBase";

export function apiBase(): string {
  return (
    localStorage.getItem(STORAGE_KEY) ||
    window.API_BASE ||
    "http://127.0.0.1:8000"
  );
}

export function setApiBase(url: string): void {
  localStorage.setItem(STORAGE_KEY, url.replace(/\/+$/, ""));
}

// The student token is generated client-side once and kept in local storage;
// it never appears in a URL.
const TOKEN_KEY = "classrecap.studentToken";

export function studentToken(): string {
  let token = localStorage.getItem(TOKEN_KEY);
  if (!token) {
    const bytes = new Uint8Array(16);
    crypto.getRandomValues(bytes);
    token = Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
    localStorage.setItem(TOKEN_KEY, token);
  }
  return token;
}

export function setStudentToken(token: string): void {
  localStorage.setItem(TOKEN_KEY, token);
}
