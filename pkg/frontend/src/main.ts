import { ApiClient } from "./api.js";
import { apiBase, setApiBase, setStudentToken, studentToken } from "./config.js";
import { ProfessorView } from "./professorView.js";
import { StudentView } from "./studentView.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
}

function main(): void {
  const baseInput = byId<HTMLInputElement>("api-base");
  baseInput.value = apiBase();
  baseInput.addEventListener("change", () => setApiBase(baseInput.value));

  const tokenInput = byId<HTMLInputElement>("student-token");
  tokenInput.value = studentToken();
  tokenInput.addEventListener("change", () => setStudentToken(tokenInput.value));

  const studentPane = byId<HTMLElement>("student-pane");
  const professorPane = byId<HTMLElement>("professor-pane");

  byId<HTMLButtonElement>("student-go").addEventListener("click", () => {
    const passcode = byId<HTMLInputElement>("student-passcode").value.trim();
    professorPane.classList.add("hidden");
    studentPane.classList.remove("hidden");
    const view = new StudentView(
      studentPane,
      new ApiClient(apiBase()),
      passcode,
      tokenInput.value.trim(),
    );
    void view.load();
  });

  byId<HTMLButtonElement>("professor-go").addEventListener("click", () => {
    const passcode = byId<HTMLInputElement>("professor-passcode").value.trim();
    studentPane.classList.add("hidden");
    professorPane.classList.remove("hidden");
    const view = new ProfessorView(professorPane, new ApiClient(apiBase()), passcode);
    void view.load();
  });
}

document.addEventListener("DOMContentLoaded", main);
