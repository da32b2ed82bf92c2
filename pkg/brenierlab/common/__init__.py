__all__ = ['exceptions']
