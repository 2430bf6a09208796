// Deployment configuration: point the UI at the service.
window.API_BASE = "http://127.0.0.1:8000";
