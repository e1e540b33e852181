"""Template-guided NLG toolkit for task-oriented dialogue."""

from .actions import Action, ActionFrame, canonical_naive, canonical_slotdesc, decompose
from .catalog import (
    Catalog,
    Dialogue,
    ServiceSchema,
    SlotSpec,
    Turn,
    load_corpus,
    load_dialogues,
    load_schemas,
)
from .encoding import EncoderOptions, EncodingMode, NlgExample, encode
from .errors import (
    CoverageInfeasible,
    DuplicateService,
    LengthMismatch,
    MissingDescription,
    MissingTemplate,
    ParseError,
    PlaceholderMismatch,
    ProtocolError,
    TgnlgError,
    TransportError,
    UnknownService,
    UnknownSlot,
)
from .evaluation import EvalReport, corpus_bleu, evaluate_run, slot_error_rate
from .rewriter import (
    CopyRewriter,
    DecodeConfig,
    RemoteRewriter,
    RewriteRequest,
    RewriteResponse,
    copy_rewrite,
    remote_rewrite,
)
from .splits import SplitSpec, derive_kshot, derive_sgd_nlg, extract_examples
from .templates import (
    Template,
    TemplateKey,
    TemplateRegistry,
    parse_template_file,
    render_action,
    render_frame,
    validate_coverage,
)

__version__ = "0.1.0"
