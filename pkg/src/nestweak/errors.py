"""Exception hierarchy shared by all nestweak modules."""


class NestweakError(Exception):
    """Base class for every error raised by the toolkit."""


class ParseError(NestweakError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedLine(ParseError):
    pass


class OffsetMismatch(ParseError):
    pass


class DiscontinuousSpan(ParseError):
    pass


class InvalidDocument(NestweakError):
    pass


class CrossingSpans(NestweakError):
    def __init__(self, doc_id, first, second):
        self.doc_id = doc_id
        self.pair = (first, second)
        super().__init__(
            f"document {doc_id!r}: crossing mentions {first.start}-{first.end} "
            f"{first.entity_type} and {second.start}-{second.end} {second.entity_type}"
        )


class NotFlat(NestweakError):
    pass


class DocMismatch(NestweakError):
    pass


class UnknownDoc(NestweakError):
    pass


class MissingDependencyLayer(NestweakError):
    pass


class TooShort(NestweakError):
    pass


class TooFewDocuments(NestweakError):
    pass


class MissingAsset(NestweakError):
    pass


class EmptyTrain(NestweakError):
    pass


class EndpointError(NestweakError):
    pass


class InvalidFlag(NestweakError):
    pass


class UnknownCommand(NestweakError):
    pass
