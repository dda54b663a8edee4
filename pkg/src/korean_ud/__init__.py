"""Korean UD treebank conversion and validation toolchain."""
from .conllu import (ConlluError, DependencyTree, Diagnostic, IllFormedTree, Relation, Token,
                     check_wellformed, children, is_wellformed, iter_document, parse_document,
                     serialize_document, serialize_tree)
from .lexicon import (Lexicon, LexiconError, SubcatFrame, FrameSlot, default_lexicon, load_lexicon,
                      parse_frame_file)
from .rules import ConversionConfig, PassReport, PipelineError, run_pipeline

__version__ = "0.1.0"
