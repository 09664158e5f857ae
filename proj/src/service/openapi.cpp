#include "mrseq/service.hpp"

#include <fmt/format.h>

#include <map>

namespace mrseq::service {

namespace {

struct Body
{
  std::string type, schema;  // schema is a components name or an inline YAML type
};

struct Query
{
  std::string name, type, description;
  bool        required = false;
};

struct Detail
{
  std::optional<Body> request;
  std::optional<Body> response;
  std::vector<Query>  query;
};

constexpr char kJson[] = "application/json";
constexpr char kResult[] = "application/vnd.mrseq.result";

std::map<std::string, Detail> const &details()
{
  static std::map<std::string, Detail> const d = {
    {"POST /api/auth/login", {Body{kJson, "Credentials"}, Body{kJson, "Session"}, {}}},
    {"GET /api/auth/me", {{}, Body{kJson, "User"}, {}}},
    {"POST /api/plot/sequence",
     {Body{kJson, "SequenceDoc"}, Body{kJson, "PlotSeries"}, {{"dt", "number", "Sample spacing in seconds, default 1e-5"}}}},
    {"POST /api/slice_preview", {Body{kJson, "SequenceDoc"}, Body{kJson, "SlicePlane"}, {}}},
    {"POST /api/simulate", {Body{kJson, "SimulateRequest"}, Body{kJson, "JobId"}, {}}},
    {"GET /api/simulate/{id}/status", {{}, Body{kJson, "Job"}, {}}},
    {"GET /api/simulate/{id}/result", {{}, Body{kResult, "binary"}, {}}},
    {"POST /api/simulate/{id}/cancel", {{}, Body{kJson, "Job"}, {}}},
    {"GET /api/phantoms", {{}, Body{kJson, "PhantomList"}, {}}},
    {"GET /api/phantoms/{id}/slice",
     {{},
      Body{kJson, "SliceImage"},
      {{"plane", "string", "axial, coronal or sagittal", true},
       {"index", "integer", "Voxel index along the fixed axis, default the middle"},
       {"quantity", "string", "pd, t1 or t2, default pd"}}}},
    {"GET /api/sequences", {{}, Body{kJson, "ItemList"}, {}}},
    {"POST /api/sequences", {Body{kJson, "NamedSequence"}, Body{kJson, "Item"}, {}}},
    {"GET /api/sequences/{id}", {{}, Body{kJson, "StoredSequence"}, {}}},
    {"PUT /api/sequences/{id}", {Body{kJson, "NamedSequence"}, Body{kJson, "Item"}, {}}},
    {"GET /api/results", {{}, Body{kJson, "ItemList"}, {}}},
    {"POST /api/results", {Body{kResult, "binary"}, Body{kJson, "Item"}, {{"name", "string", "Display name"}}}},
    {"GET /api/results/{id}", {{}, Body{kResult, "binary"}, {}}},
    {"GET /api/users", {{}, Body{kJson, "UserList"}, {}}},
    {"POST /api/users", {Body{kJson, "NewUser"}, Body{kJson, "User"}, {}}},
    {"GET /api/users/{id}", {{}, Body{kJson, "User"}, {}}},
    {"PUT /api/users/{id}", {Body{kJson, "UserUpdate"}, Body{kJson, "User"}, {}}},
  };
  return d;
}

std::string reason(int status)
{
  switch (status) {
    case 200: return "OK";
    case 201: return "Created";
    case 202: return "Accepted";
    case 204: return "No content";
    case 400: return "Bad query parameter";
    case 401: return "Missing, invalid or expired token";
    case 403: return "Admin role required";
    case 404: return "Unknown, or owned by another user";
    case 409: return "Conflicts with current state";
    case 422: return "Invalid body; violations carry field paths";
    case 429: return "Job queue full";
    default: return "Error";
  }
}

void schema_ref(std::string &out, Body const &b, int indent)
{
  std::string const pad(std::size_t(indent), ' ');
  if (b.schema == "binary") {
    out += fmt::format("{}schema:\n{}  type: string\n{}  format: binary\n", pad, pad, pad);
  } else {
    out += fmt::format("{}schema:\n{}  $ref: '#/components/schemas/{}'\n", pad, pad, b.schema);
  }
}

constexpr char kComponents[] = R"(components:
  securitySchemes:
    bearer:
      type: http
      scheme: bearer
  schemas:
    Error:
      type: object
      required: [code, message]
      properties:
        code:
          type: string
          description: TOKEN_MISSING, TOKEN_INVALID, TOKEN_EXPIRED, INVALID_CREDENTIALS, FORBIDDEN, NOT_FOUND, SCHEMA_ERROR, INVALID_SEQUENCE, RESULT_NOT_READY, QUEUE_FULL, BAD_PLANE, BAD_INDEX, BAD_QUANTITY, NO_GRID, USERNAME_TAKEN, SELF_DELETE, INTERNAL
        message:
          type: string
        violations:
          type: array
          items:
            $ref: '#/components/schemas/Violation'
    Violation:
      type: object
      required: [path, kind, message]
      properties:
        path:
          type: string
          example: .sequence.blocks[2].flip_angle
        kind:
          type: string
        axis:
          type: string
          enum: [x, y, z]
        message:
          type: string
    Credentials:
      type: object
      required: [username, password]
      properties:
        username:
          type: string
        password:
          type: string
    Session:
      type: object
      properties:
        token:
          type: string
        expires_at:
          type: number
          description: Unix seconds
        user:
          $ref: '#/components/schemas/User'
    User:
      type: object
      properties:
        id:
          type: integer
        username:
          type: string
        role:
          type: string
          enum: [user, admin]
        created_at:
          type: number
    UserList:
      type: array
      items:
        $ref: '#/components/schemas/User'
    NewUser:
      type: object
      required: [username, password]
      properties:
        username:
          type: string
          pattern: '^[A-Za-z0-9_.-]{1,64}$'
        password:
          type: string
          minLength: 8
        role:
          type: string
          enum: [user, admin]
          default: user
    UserUpdate:
      type: object
      properties:
        password:
          type: string
          minLength: 8
        role:
          type: string
          enum: [user, admin]
    SequenceDoc:
      type: object
      description: Sequence file, see docs/formats.md
      required: [mrseq_version, scanner, blocks]
    PlotSeries:
      type: object
      description: Seven arrays of equal length
      properties:
        t:
          type: array
          items:
            type: number
        rf_mag:
          type: array
          items:
            type: number
        rf_phase:
          type: array
          items:
            type: number
        gx:
          type: array
          items:
            type: number
        gy:
          type: array
          items:
            type: number
        gz:
          type: array
          items:
            type: number
        adc:
          type: array
          items:
            type: number
    SlicePlane:
      type: object
      nullable: true
      properties:
        axis:
          type: string
          enum: [x, y, z]
        center_offset:
          type: number
        thickness:
          type: number
    SimConfig:
      type: object
      properties:
        dt_rf:
          type: number
          default: 1.0e-6
        dt_grad:
          type: number
          default: 1.0e-5
        threads:
          type: integer
          default: 0
        kernel:
          type: string
          enum: [auto, scalar, avx2]
    SimulateRequest:
      type: object
      required: [sequence, phantom_id]
      properties:
        sequence:
          $ref: '#/components/schemas/SequenceDoc'
        phantom_id:
          type: string
        config:
          $ref: '#/components/schemas/SimConfig'
    JobId:
      type: object
      properties:
        job_id:
          type: integer
    Job:
      type: object
      properties:
        id:
          type: integer
        owner:
          type: integer
        state:
          type: string
          enum: [queued, running, done, failed, cancelled]
        progress:
          type: number
          minimum: 0
          maximum: 1
        phantom_id:
          type: string
        submitted_at:
          type: number
        started_at:
          type: number
          nullable: true
        finished_at:
          type: number
          nullable: true
        result_id:
          type: integer
          nullable: true
        error:
          type: string
    PhantomList:
      type: array
      items:
        type: object
        properties:
          id:
            type: string
          name:
            type: string
          n_spins:
            type: integer
          moving:
            type: boolean
          grid:
            type: object
            nullable: true
    SliceImage:
      type: object
      properties:
        rows:
          type: integer
        cols:
          type: integer
        u_axis:
          type: string
        v_axis:
          type: string
        u_range:
          type: array
          items:
            type: number
        v_range:
          type: array
          items:
            type: number
        values:
          type: array
          description: Row-major, rows along v
          items:
            type: number
    Item:
      type: object
      properties:
        id:
          type: integer
        owner:
          type: integer
        name:
          type: string
        created_at:
          type: number
        size:
          type: integer
        blake2b:
          type: string
    ItemList:
      type: array
      items:
        $ref: '#/components/schemas/Item'
    NamedSequence:
      type: object
      required: [name, sequence]
      properties:
        name:
          type: string
        sequence:
          $ref: '#/components/schemas/SequenceDoc'
    StoredSequence:
      allOf:
        - $ref: '#/components/schemas/Item'
        - type: object
          properties:
            sequence:
              $ref: '#/components/schemas/SequenceDoc'
)";

} // namespace

std::string openapi_yaml()
{
  std::string out = "# Generated by mrseq-server --openapi.\n"
                    "openapi: 3.0.3\n"
                    "info:\n"
                    "  title: mrseq API\n"
                    "  version: '1'\n"
                    "paths:\n";
  std::string current;
  for (auto const &r : routes()) {
    if (r.path != current) {
      out += fmt::format("  {}:\n", r.path);
      current = r.path;
    }
    std::string method = r.method;
    for (char &c : method) { c = char(std::tolower(static_cast<unsigned char>(c))); }
    out += fmt::format("    {}:\n      summary: {}\n", method, r.summary);
    if (r.access == Access::open) {
      out += "      security: []\n";
    } else {
      out += "      security:\n        - bearer: []\n";
    }
    auto const  it = details().find(r.method + " " + r.path);
    Detail const d = it == details().end() ? Detail{} : it->second;
    bool const  has_id = r.path.find("{id}") != std::string::npos;
    if (has_id || !d.query.empty()) {
      out += "      parameters:\n";
      if (has_id) {
        std::string const type = r.path.rfind("/api/phantoms", 0) == 0 ? "string" : "integer";
        out += fmt::format("        - name: id\n          in: path\n          required: true\n          schema:\n            type: {}\n", type);
      }
      for (auto const &q : d.query) {
        out += fmt::format("        - name: {}\n          in: query\n          required: {}\n          description: {}\n"
                           "          schema:\n            type: {}\n",
                           q.name, q.required ? "true" : "false", q.description, q.type);
      }
    }
    if (d.request) {
      out += fmt::format("      requestBody:\n        required: true\n        content:\n          {}:\n", d.request->type);
      schema_ref(out, *d.request, 12);
    }
    out += "      responses:\n";
    for (int s : r.statuses) {
      out += fmt::format("        '{}':\n          description: {}\n", s, reason(s));
      if (s < 300 && d.response) {
        out += fmt::format("          content:\n            {}:\n", d.response->type);
        schema_ref(out, *d.response, 14);
      } else if (s >= 400) {
        out += "          content:\n            application/json:\n              schema:\n"
               "                $ref: '#/components/schemas/Error'\n";
      }
    }
  }
  return out + kComponents;
}

} // namespace mrseq::service
